"""Kernels on [0, 1] with known Mercer eigendecompositions.

A kernel here is a symmetric positive semidefinite function together with the
eigenvalues ``mu_k`` and L2-orthonormal eigenfunctions ``psi_k`` of its
integral operator.  Any member f of the induced Hilbert space H expands as
``f = sum_k sqrt(mu_k) a_k psi_k`` with ``||f||_H^2 = sum a_k^2`` and
``||f||_L2^2 = sum mu_k a_k^2``; finite coefficient vectors ``a`` are the
representation used throughout the package.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .validation import as_float_array


@dataclass(frozen=True)
class Kernel:
    """A PSD kernel with closed-form eigenpairs.

    Attributes
    ----------
    evaluate : callable(s, t) -> float or ndarray
        Kernel values; must be symmetric and accept numpy broadcasting.
    eigenvalue : callable(k) -> float or ndarray
        k-th eigenvalue of the integral operator, 1-based, vectorized over k.
    eigenfunction : callable(k, t) -> float or ndarray
        k-th L2-orthonormal eigenfunction evaluated at t, 1-based.
    decay_alpha : float
        Polynomial decay exponent: mu_k <= decay_constant * k**(-2*decay_alpha).
    decay_constant : float
        The constant in the decay bound above.
    section_l2_inner : callable(s, t) -> float or ndarray, optional
        Closed form for integral_0^1 evaluate(u, s) * evaluate(u, t) du.
        When absent, adaptive quadrature is used.
    name : str
        Identifier used in configs.
    """

    evaluate: Callable
    eigenvalue: Callable
    eigenfunction: Callable
    decay_alpha: float
    decay_constant: float
    section_l2_inner: Optional[Callable] = field(default=None, repr=False)
    name: str = "custom"

    def eigenvalues(self, m):
        """First m eigenvalues as a vector."""
        return np.asarray(self.eigenvalue(np.arange(1, m + 1)), dtype=float)


def _min_kernel_section_inner(s, t):
    # integral_0^1 min(u, s) min(u, t) du = a*b - a*b^2/2 - a^3/6, a = min, b = max
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a = np.minimum(s, t)
    b = np.maximum(s, t)
    return a * b - a * b**2 / 2.0 - a**3 / 6.0


def sobolev1_kernel() -> Kernel:
    """First-order Sobolev kernel min(s, t) on [0, 1].

    Eigenpairs of the integral operator: mu_k = ((2k-1) pi / 2)^(-2) and
    psi_k(t) = sqrt(2) sin(t / sqrt(mu_k)).  The decay exponent is alpha = 1
    since mu_k <= (4 / pi^2) k^(-2).
    """

    def evaluate(s, t):
        return np.minimum(np.asarray(s, dtype=float), np.asarray(t, dtype=float))

    def eigenvalue(k):
        k = np.asarray(k)
        return ((2.0 * k - 1.0) * np.pi / 2.0) ** -2.0

    def eigenfunction(k, t):
        omega = (2.0 * np.asarray(k) - 1.0) * np.pi / 2.0
        return np.sqrt(2.0) * np.sin(omega * np.asarray(t, dtype=float))

    return Kernel(
        evaluate=evaluate,
        eigenvalue=eigenvalue,
        eigenfunction=eigenfunction,
        decay_alpha=1.0,
        decay_constant=4.0 / np.pi**2,
        section_l2_inner=_min_kernel_section_inner,
        name="sobolev1",
    )


_KERNELS = {"sobolev1": sobolev1_kernel}


def kernel_from_name(name):
    try:
        return _KERNELS[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(_KERNELS)}") from None


def kernel_l2_inner_sections(kern: Kernel, s, t, *, quad_tol=1e-10):
    """L2 inner product of two kernel sections: integral of K(u,s) K(u,t) du.

    Uses the kernel's closed form when available, otherwise adaptive
    quadrature with absolute tolerance ``quad_tol``.  Raises ValueError when
    s or t falls outside [0, 1].
    """
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > 1) or np.any(t_arr < 0) or np.any(t_arr > 1):
        raise ValueError("section arguments must lie in [0, 1]")
    if kern.section_l2_inner is not None:
        return kern.section_l2_inner(s_arr, t_arr)

    def one(si, ti):
        val, _ = quad(lambda u: kern.evaluate(u, si) * kern.evaluate(u, ti), 0.0, 1.0, epsabs=quad_tol)
        return val

    if s_arr.ndim == 0 and t_arr.ndim == 0:
        return one(float(s_arr), float(t_arr))
    s_b, t_b = np.broadcast_arrays(s_arr, t_arr)
    out = np.empty(s_b.shape)
    for idx in np.ndindex(s_b.shape):
        out[idx] = one(float(s_b[idx]), float(t_b[idx]))
    return out


@dataclass(frozen=True)
class EigenExpansion:
    """Function given by a finite expansion f = sum_k sqrt(mu_k) a_k psi_k."""

    kernel: Kernel
    coeffs: np.ndarray  # shape (kmax,), entry k-1 multiplies sqrt(mu_k) psi_k

    def __post_init__(self):
        object.__setattr__(self, "coeffs", as_float_array(self.coeffs, "coeffs", ndim=1))

    @property
    def kmax(self):
        return self.coeffs.shape[0]

    def hilbert_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def l2_norm(self):
        mu = self.kernel.eigenvalues(self.kmax)
        return float(np.sqrt(np.sum(mu * self.coeffs**2)))

    def values(self, t):
        return eigen_expansion_values(self.kernel, self.coeffs[:, None], t)[:, 0]


def eigen_expansion_values(kern: Kernel, coeff_matrix, t):
    """Evaluate columns of a coefficient matrix as functions on a grid.

    ``coeff_matrix`` has shape (kmax, r); column j represents
    f_j = sum_k sqrt(mu_k) A[k-1, j] psi_k.  Returns shape (len(t), r).
    """
    A = as_float_array(coeff_matrix, "coeff_matrix", ndim=2)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    kmax = A.shape[0]
    ks = np.arange(1, kmax + 1)
    mu = kern.eigenvalues(kmax)
    basis = kern.eigenfunction(ks[None, :], t[:, None])  # (len(t), kmax)
    return basis @ (np.sqrt(mu)[:, None] * A)
