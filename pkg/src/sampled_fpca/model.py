"""Ground-truth spiked functional model and synthetic data generation.

Observations follow y_i = Phi(x_i) + sigma_m w_i where the latent curves are
random rank-r combinations x_i = sum_j s_j b_ij f_j of fixed L2-orthonormal
components f_j drawn from the kernel's Hilbert space, b_ij and the noise being
i.i.d. standard normal.  In matrix form Y = B S Z*^T + sigma_m W with
Z* = [Phi f_1 ... Phi f_r].
"""

from dataclasses import dataclass, field
import numpy as np

from . import rng
from .errors import ConfigError
from .kernels import Kernel
from .sampling import SamplingOperator, apply_to_components, orthonormality_defect
from .theory import growth_function
from .validation import as_float_array, check_nonnegative, check_positive


@dataclass(frozen=True)
class SpikedModel:
    """Rank-r spiked functional model.

    ``components`` has shape (kmax, r); column j holds the eigen-expansion
    coefficients of f_j = sum_k sqrt(mu_k) A[k-1, j] psi_k.  Components must
    be L2-orthonormal with Hilbert norms at most ``rho``.
    """

    kernel: Kernel
    r: int
    signals: np.ndarray
    components: np.ndarray
    rho: float
    sigma0: float

    def __post_init__(self):
        signals = as_float_array(self.signals, "signals", ndim=1)
        A = as_float_array(self.components, "components", ndim=2)
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "components", A)
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "sigma0", float(self.sigma0))
        if signals.shape != (self.r,) or A.shape[1] != self.r:
            raise ValueError("signals and components must both have r columns/entries")
        if np.any(signals <= 0) or np.any(np.diff(signals) > 0):
            raise ValueError("signals must be positive and nonincreasing")
        check_positive(self.rho, "rho")
        check_nonnegative(self.sigma0, "sigma0")
        gram = component_l2_gram(self.kernel, A)
        if np.abs(gram - np.eye(self.r)).max() > 1e-8:
            raise ValueError("components are not L2-orthonormal within 1e-8")
        hnorms = component_hilbert_norms(A)
        if np.any(hnorms > self.rho * (1 + 1e-12)):
            raise ValueError(
                f"component Hilbert norms {hnorms} exceed rho = {self.rho}"
            )

    def component_hilbert_norms(self):
        return component_hilbert_norms(self.components)


@dataclass(frozen=True)
class Dataset:
    """Synthetic observations plus the latent normals used to build them."""

    Y: np.ndarray
    B: np.ndarray
    seed: int
    sigma_m: float
    op_descriptor: dict = field(repr=False)


def component_l2_gram(kern: Kernel, coeff_matrix) -> np.ndarray:
    """Exact L2 Gram of eigen-expansion columns: A^T diag(mu) A."""
    A = as_float_array(coeff_matrix, "coeff_matrix", ndim=2)
    mu = kern.eigenvalues(A.shape[0])
    return A.T @ (mu[:, None] * A)


def component_hilbert_norms(coeff_matrix) -> np.ndarray:
    """Hilbert norms of eigen-expansion columns (plain column norms)."""
    A = as_float_array(coeff_matrix, "coeff_matrix", ndim=2)
    return np.linalg.norm(A, axis=0)


def default_components(kern: Kernel, r, indices) -> np.ndarray:
    """Components equal to kernel eigenfunctions psi_{indices[j]}.

    These are exactly L2-orthonormal, and component j has Hilbert norm
    mu_{indices[j]}^(-1/2).  Returns the (kmax, r) coefficient matrix.
    """
    r = int(r)
    idx = np.asarray(indices, dtype=int)
    if idx.shape != (r,):
        raise ValueError("need exactly r indices")
    if np.any(idx < 1) or len(set(idx.tolist())) != r:
        raise ValueError("indices must be distinct positive integers")
    kmax = int(idx.max())
    mu = kern.eigenvalues(kmax)
    A = np.zeros((kmax, r))
    A[idx - 1, np.arange(r)] = 1.0 / np.sqrt(mu[idx - 1])
    return A


def model_from_config(cfg: dict, kern: Kernel) -> SpikedModel:
    """Build a model from {"r", "signals", "component_indices", "rho", "sigma0"}.

    rho may be the string "auto", which sets it to the largest component
    Hilbert norm.
    """
    try:
        r = int(cfg["r"])
        signals = as_float_array(cfg["signals"], "signals", ndim=1)
        indices = cfg["component_indices"]
        sigma0 = float(cfg["sigma0"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"model config needs r, signals, component_indices, sigma0: {exc}") from exc
    try:
        A = default_components(kern, r, indices)
        rho = cfg.get("rho", "auto")
        if rho == "auto":
            rho = float(component_hilbert_norms(A).max())
        return SpikedModel(
            kernel=kern, r=r, signals=signals, components=A, rho=float(rho), sigma0=sigma0
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model config: {exc}") from exc


def generate_dataset(model: SpikedModel, op: SamplingOperator, n, seed) -> Dataset:
    """Draw Y = B S Z*^T + sigma_m W with a Philox stream keyed by ``seed``.

    B (n x r) is drawn first and W (n x m) second from the same stream, so a
    given (model, op, n, seed) reproduces Y bit-for-bit.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    zstar = apply_to_components(op, model.components)  # (m, r)
    draws = rng.standard_normal(seed, n * (model.r + op.m))
    B = draws[: n * model.r].reshape(n, model.r)
    W = draws[n * model.r :].reshape(n, op.m)
    sigma_m = model.sigma0 * op.sigma_scale
    Y = (B * model.signals[None, :]) @ zstar.T
    if sigma_m > 0:
        Y = Y + sigma_m * W
    return Dataset(Y=Y, B=B, seed=int(seed), sigma_m=sigma_m, op_descriptor=op.descriptor())


@dataclass(frozen=True)
class AssumptionReport:
    """Diagnostic (never enforced) checks of the standard model assumptions."""

    signal_ratio: float
    signal_ratio_ok: bool          # s_r^2 / s_1^2 >= 1/2
    noise_level_ok: bool           # sigma0^2 <= kappa * s_1^2
    orthonormality_defect: float
    orthonormality_ok: bool        # defect <= 1 / (2r)
    complexity_ok: bool            # sup_t (sigma_m/sqrt(n)) G(t)/t <= sqrt(kappa)
    rank_ok: bool                  # r <= min(m/2, n/4, kappa sqrt(n)/sigma_m)
    kappa: float

    def items(self):
        return [
            ("signal ratio s_r^2/s_1^2 >= 1/2", self.signal_ratio_ok),
            ("noise level sigma0^2 <= kappa s_1^2", self.noise_level_ok),
            ("sampled orthonormality defect <= 1/(2r)", self.orthonormality_ok),
            ("complexity sup_t G(t)/t bound", self.complexity_ok),
            ("rank r small vs (m, n)", self.rank_ok),
        ]

    @property
    def all_ok(self):
        return all(ok for _, ok in self.items())


def check_assumptions(model: SpikedModel, op: SamplingOperator, n, kappa=1.0) -> AssumptionReport:
    """Evaluate the model/design assumptions as booleans.

    Purely diagnostic: estimation never refuses to run on a violation (even
    standard demo settings violate the signal-ratio condition).
    """
    n = int(n)
    kappa = check_positive(kappa, "kappa")
    s = model.signals
    ratio = float(s[-1] ** 2 / s[0] ** 2)
    sigma_m = model.sigma0 * op.sigma_scale
    zstar = apply_to_components(op, model.components)
    defect = orthonormality_defect(zstar)
    mu_hats = op.mu_hats
    t_grid = np.logspace(-6, 3, 200)
    growth_ratio = max(
        growth_function(mu_hats, model.r, model.rho, t) / t for t in t_grid
    )
    complexity_ok = (sigma_m / np.sqrt(n)) * growth_ratio <= np.sqrt(kappa) + 1e-12
    rank_cap = min(op.m / 2.0, n / 4.0, np.inf if sigma_m == 0 else kappa * np.sqrt(n) / sigma_m)
    return AssumptionReport(
        signal_ratio=ratio,
        signal_ratio_ok=ratio >= 0.5,
        noise_level_ok=model.sigma0**2 <= kappa * s[0] ** 2,
        orthonormality_defect=float(defect),
        orthonormality_ok=defect <= 1.0 / (2 * model.r),
        complexity_ok=bool(complexity_ok),
        rank_ok=model.r <= rank_cap,
        kappa=kappa,
    )
