"""Reference convergence-rate machinery for the two sampling designs.

These are computable prediction curves: the growth function measuring the
statistical complexity of Range(Phi*), the critical radius it induces, and the
achievable / minimax-lower-bound rate expressions.  All universal constants
default to 1 and are exposed as arguments; only the exponents are meaningful,
so these curves are for plotting and slope comparison, never pass/fail gates
on absolute values.
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import NoSolutionError
from .validation import as_float_array, check_nonnegative, check_positive


@dataclass(frozen=True)
class RatePrediction:
    """Named rate terms plus the predicted log-log slope vs the driving product."""

    model_kind: Literal["time", "truncation"]
    alpha: float
    estimation_term: float
    approximation_term: float
    fast_term: float
    exponent: float
    driving: str
    truncation_regime_ok: Optional[bool] = None

    @property
    def total(self):
        return min(self.estimation_term, self.fast_term) + self.approximation_term

    def to_dict(self):
        return {
            "model_kind": self.model_kind,
            "alpha": self.alpha,
            "estimation_term": self.estimation_term,
            "approximation_term": self.approximation_term,
            "fast_term": self.fast_term,
            "exponent": self.exponent,
            "driving": self.driving,
            "total": self.total,
        }


def growth_function(mu_hats, r, rho, t) -> float:
    """Complexity measure [sum_j min(t^2, r rho^2 mu_hat_j)]^(1/2).

    ``mu_hats`` are the eigenvalues of the operator Gram K sorted
    nonincreasing.  Nondecreasing in t, and t -> G(t)/t is nonincreasing.
    """
    mu_hats = as_float_array(mu_hats, "mu_hats", ndim=1)
    if np.any(np.diff(mu_hats) > 1e-12 * max(1.0, mu_hats[0])):
        raise ValueError("mu_hats must be sorted nonincreasing")
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(np.sqrt(np.sum(np.minimum(t**2, r * rho**2 * mu_hats))))


def critical_radius(mu_hats, r, rho, sigma_m, n, kappa=1.0) -> float:
    """Smallest eps > 0 with (sigma_m/sqrt(n)) r^(3/2) G(eps) <= kappa eps^2.

    Since G(t)/t is nonincreasing, the ratio of the two sides is monotone in
    eps and bisection applies.  Returns 0 when sigma_m = 0.
    """
    mu_hats = as_float_array(mu_hats, "mu_hats", ndim=1)
    sigma_m = check_nonnegative(sigma_m, "sigma_m")
    kappa = check_positive(kappa, "kappa")
    if sigma_m == 0.0:
        return 0.0
    coef = sigma_m * r**1.5 / np.sqrt(n)

    def excess(eps):
        # positive when eps is still too small
        return coef * growth_function(mu_hats, r, rho, eps) - kappa * eps**2

    g_sat = np.sqrt(r * rho**2 * np.sum(mu_hats))
    eps_max = max(np.sqrt(coef * g_sat / kappa), 1e-12)
    if excess(eps_max) > 1e-12 * eps_max**2:
        raise NoSolutionError("no critical radius below the saturation point")
    lo = 1e-12
    if excess(lo) <= 0:
        return lo
    hi = eps_max
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-12:
            break
    return float(hi)


def _estimation_constant(alpha, r, rho):
    return r ** (3.0 + 1.0 / (2.0 * alpha)) * rho ** (1.0 / alpha)


def predicted_rates(model_kind, alpha, r, rho, sigma0, m, n) -> RatePrediction:
    """Achievable squared-error rate terms for a polynomial-decay design.

    Time sampling: estimation (C sigma0^2/(mn))^(2a/(2a+1)) competes with the
    fast term r^3 sigma0^2/n, plus approximation m^(-2a).  Truncation: the
    estimation term depends on n only, the fast rate is unachievable
    (reported as inf), approximation still m^(-2a).
    """
    alpha = check_positive(alpha, "alpha")
    expo = 2 * alpha / (2 * alpha + 1)
    cst = _estimation_constant(alpha, r, rho)
    approx = float(m) ** (-2 * alpha)
    if model_kind == "time":
        est = (cst * sigma0**2 / (m * n)) ** expo
        fast = r**3 * sigma0**2 / n
        return RatePrediction("time", alpha, est, approx, fast, -expo, "mn")
    if model_kind == "truncation":
        est = (cst * sigma0**2 / n) ** expo
        return RatePrediction("truncation", alpha, est, approx, np.inf, -expo, "n")
    raise ValueError(f"unknown model_kind {model_kind!r}")


def minimax_lower_bounds(model_kind, alpha, sigma0, m, n, c0=1.0) -> RatePrediction:
    """Minimax lower-bound shapes for squared L2 error (unit constants).

    Time sampling: min{(sigma0^2/(mn))^(2a/(2a+1)), sigma0^2/n} + m^(-2a).
    Truncation: (sigma0^2/n)^(2a/(2a+1)) + m^(-2a); its first term is only
    the binding one when m >= (c0 n)^(1/(2a+1)), recorded as a flag.
    """
    alpha = check_positive(alpha, "alpha")
    expo = 2 * alpha / (2 * alpha + 1)
    approx = float(m) ** (-2 * alpha)
    if model_kind == "time":
        est = (sigma0**2 / (m * n)) ** expo
        fast = sigma0**2 / n
        return RatePrediction("time", alpha, est, approx, fast, -expo, "mn")
    if model_kind == "truncation":
        est = (sigma0**2 / n) ** expo
        regime_ok = m >= (c0 * n) ** (1.0 / (2 * alpha + 1))
        return RatePrediction(
            "truncation", alpha, est, approx, np.inf, -expo, "n",
            truncation_regime_ok=bool(regime_ok),
        )
    raise ValueError(f"unknown model_kind {model_kind!r}")
