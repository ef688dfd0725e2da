"""Sampling operators Phi: H -> R^m and their approximation diagnostics.

Two concrete operators are provided.  Time sampling maps f to the vector of
point evaluations (f(t_1), ..., f(t_m)) / sqrt(m) with representers
``phi_j = K(., t_j) / sqrt(m)`` and per-coordinate noise scale
``sigma_0 / sqrt(m)``.  Basis truncation maps f to its first m L2 basis
coefficients, with representers ``phi_j = mu_j psi_j`` and unchanged noise
scale.  Each operator carries its Gram matrix ``K[i, j] = <phi_i, phi_j>_H``
(with a cached Cholesky factor and eigendecomposition) and the L2 Gram
``theta[i, j] = <phi_i, phi_j>_L2``.
"""

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .errors import (
    ConfigError,
    InvalidPointsError,
    RepresentationMismatchError,
    SingularGramError,
)
from .kernels import EigenExpansion, Kernel, kernel_from_name, kernel_l2_inner_sections
from .validation import as_float_array, check_positive, symmetrize


@dataclass
class SamplingOperator:
    """A concrete bounded linear sampling operator with cached linear algebra."""

    variant: Literal["time", "truncation"]
    kernel: Kernel
    m: int
    sigma_scale: float
    K: np.ndarray
    theta: np.ndarray
    points: Optional[np.ndarray] = None
    ridge: float = 0.0  # amount added to diag(K) by the opt-in fallback
    _chol: tuple = field(default=None, repr=False)
    _eig: tuple = field(default=None, repr=False)

    def solve_k(self, B):
        """Solve K x = B through the cached Cholesky factor."""
        if self._chol is None:
            raise SingularGramError("operator has no Cholesky factor")
        return cho_solve(self._chol, np.asarray(B, dtype=float))

    def k_eigendecomposition(self):
        """Eigenvalues of K sorted descending and matching eigenvectors, cached.

        The second element is None when K is diagonal with descending entries
        (the eigenvector matrix is the identity).
        """
        if self._eig is None:
            diag = self.K.diagonal()
            if np.count_nonzero(self.K - np.diag(diag)) == 0 and np.all(np.diff(diag) <= 0):
                if diag[-1] <= 0:
                    raise SingularGramError("K has a nonpositive eigenvalue")
                self._eig = (diag.copy(), None)
            else:
                w, V = eigh(self.K)
                if w[0] <= 0:
                    raise SingularGramError("K has a nonpositive eigenvalue")
                self._eig = (w[::-1].copy(), np.ascontiguousarray(V[:, ::-1]))
        return self._eig

    @property
    def mu_hats(self):
        return self.k_eigendecomposition()[0]

    def descriptor(self):
        """JSON-serializable summary of the operator."""
        desc = {"variant": self.variant, "m": self.m, "kernel": self.kernel.name}
        if self.points is not None:
            desc["points"] = [float(t) for t in self.points]
        return desc


@dataclass(frozen=True)
class RepresenterExpansion:
    """Function in Range(Phi*): f = sum_i coeffs[i] phi_i for one operator."""

    operator: SamplingOperator
    coeffs: np.ndarray

    def __post_init__(self):
        c = as_float_array(self.coeffs, "coeffs", ndim=1)
        if c.shape[0] != self.operator.m:
            raise ValueError("coefficient length must equal operator.m")
        object.__setattr__(self, "coeffs", c)

    def hilbert_norm(self):
        return float(np.sqrt(self.coeffs @ self.operator.K @ self.coeffs))

    def values(self, t):
        return representer_values(self.operator, t) @ self.coeffs


def uniform_points(m):
    """Design points j/m for j = 1..m; excludes 0 where min-kernel representers vanish."""
    return np.arange(1, m + 1, dtype=float) / m


def _factor_gram(K, ridge_on_failure):
    try:
        return cho_factor(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    if not ridge_on_failure:
        raise SingularGramError(
            "Gram matrix K is not numerically positive definite "
            "(pass ridge_on_failure=True to regularize)"
        )
    ridge = 1e-12 * float(np.trace(K)) / K.shape[0]
    try:
        return cho_factor(K + ridge * np.eye(K.shape[0]), lower=True), ridge
    except np.linalg.LinAlgError as exc:
        raise SingularGramError("Gram matrix K is singular even after ridge fallback") from exc


def make_time_sampling(kern: Kernel, points, *, ridge_on_failure=False) -> SamplingOperator:
    """Time-sampling operator at fixed design points in (0, 1].

    K[i, j] = kern(t_i, t_j) / m and theta[i, j] = <K(., t_i), K(., t_j)>_L2 / m.
    Points must be strictly increasing; t = 0 is rejected because the
    representer of evaluation at 0 vanishes for kernels with f(0) = 0, making
    K singular.
    """
    t = as_float_array(points, "points", ndim=1)
    if t.size == 0:
        raise InvalidPointsError("need at least one sampling point")
    if np.any(t <= 0) or np.any(t > 1):
        raise InvalidPointsError("sampling points must lie in (0, 1]")
    if np.any(np.diff(t) <= 0):
        raise InvalidPointsError("sampling points must be strictly increasing (no duplicates)")
    m = t.size
    K = symmetrize(np.asarray(kern.evaluate(t[:, None], t[None, :]), dtype=float) / m)
    theta = symmetrize(np.asarray(kernel_l2_inner_sections(kern, t[:, None], t[None, :]), dtype=float) / m)
    chol, ridge = _factor_gram(K, ridge_on_failure)
    if ridge:
        K = K + ridge * np.eye(m)
    return SamplingOperator(
        variant="time",
        kernel=kern,
        m=m,
        sigma_scale=1.0 / np.sqrt(m),
        K=K,
        theta=theta,
        points=t,
        ridge=ridge,
        _chol=chol,
    )


def make_basis_truncation(kern: Kernel, m) -> SamplingOperator:
    """Basis-truncation operator keeping the first m eigenfunction coefficients.

    K = diag(mu_1, ..., mu_m) and theta = K^2 exactly.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be a positive integer")
    mu = kern.eigenvalues(m)
    K = np.diag(mu)
    chol, ridge = _factor_gram(K, False)
    return SamplingOperator(
        variant="truncation",
        kernel=kern,
        m=m,
        sigma_scale=1.0,
        K=K,
        theta=np.diag(mu**2),
        ridge=ridge,
        _chol=chol,
    )


def operator_from_config(cfg: dict) -> SamplingOperator:
    """Build an operator from {"variant", "m", "points", "kernel"}."""
    try:
        variant = cfg["variant"]
        m = int(cfg["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"operator config needs 'variant' and integer 'm': {exc}") from exc
    kern = kernel_from_name(cfg.get("kernel", "sobolev1"))
    if variant == "time":
        points = cfg.get("points", "uniform")
        if isinstance(points, str):
            if points != "uniform":
                raise ConfigError(f"unknown points rule {points!r}")
            points = uniform_points(m)
        else:
            points = as_float_array(points, "points", ndim=1)
            if points.size != m:
                raise ConfigError("explicit points must have length m")
        return make_time_sampling(kern, points)
    if variant == "truncation":
        return make_basis_truncation(kern, m)
    raise ConfigError(f"unknown operator variant {variant!r}")


def apply_operator(op: SamplingOperator, f):
    """Apply Phi to a function representation, returning a length-m vector.

    Time sampling evaluates f at the design points (any representation that
    supports point evaluation); truncation extracts L2 basis coefficients,
    which is exact for eigen expansions and for representer expansions of a
    truncation operator with the same kernel.
    """
    if op.variant == "time":
        if isinstance(f, (EigenExpansion, RepresenterExpansion)):
            return f.values(op.points) / np.sqrt(op.m)
        raise RepresentationMismatchError(
            f"cannot point-evaluate object of type {type(f).__name__}"
        )
    # truncation
    if isinstance(f, EigenExpansion):
        if f.kernel.name != op.kernel.name:
            raise RepresentationMismatchError("eigen expansion uses a different kernel")
        out = np.zeros(op.m)
        k = min(op.m, f.kmax)
        out[:k] = np.sqrt(op.kernel.eigenvalues(op.m))[:k] * f.coeffs[:k]
        return out
    if isinstance(f, RepresenterExpansion):
        src = f.operator
        if src.variant != "truncation" or src.kernel.name != op.kernel.name:
            raise RepresentationMismatchError(
                "representer expansions are only exact under a truncation operator "
                "with the same kernel"
            )
        # f = sum_i c_i mu_i psi_i, so <psi_j, f>_L2 = c_j mu_j
        out = np.zeros(op.m)
        k = min(op.m, src.m)
        out[:k] = (src.K.diagonal() * f.coeffs)[:k]
        return out
    raise RepresentationMismatchError(f"unsupported representation {type(f).__name__}")


def apply_to_components(op: SamplingOperator, coeff_matrix) -> np.ndarray:
    """Apply Phi columnwise to eigen-expansion coefficients, returning (m, r).

    Column j of ``coeff_matrix`` (shape (kmax, r)) holds the coefficients of
    f_j = sum_k sqrt(mu_k) A[k-1, j] psi_k.
    """
    A = as_float_array(coeff_matrix, "coeff_matrix", ndim=2)
    kmax = A.shape[0]
    mu = op.kernel.eigenvalues(kmax)
    if op.variant == "time":
        ks = np.arange(1, kmax + 1)
        basis = op.kernel.eigenfunction(ks[None, :], op.points[:, None])  # (m, kmax)
        return (basis * np.sqrt(mu)[None, :]) @ A / np.sqrt(op.m)
    out = np.zeros((op.m, A.shape[1]))
    k = min(op.m, kmax)
    out[:k] = np.sqrt(mu[:k])[:, None] * A[:k]
    return out


def min_norm_interpolant(op: SamplingOperator, z) -> RepresenterExpansion:
    """The minimum-Hilbert-norm function g with Phi g = z, namely Phi* K^{-1} z.

    The returned expansion has coefficients K^{-1} z over the representers,
    and squared Hilbert norm z^T K^{-1} z.
    """
    z = as_float_array(z, "z", ndim=1)
    return RepresenterExpansion(op, op.solve_k(z))


def seminorm_defect(op: SamplingOperator) -> float:
    """Worst-case gap between the sampled seminorm and the L2 norm.

    Over unit-Hilbert-norm functions in Range(Phi*), the supremum of
    | ||f||_Phi^2 - ||f||_L2^2 | equals the spectral norm of
    K - K^{-1/2} theta K^{-1/2}; zero exactly for basis truncation.
    """
    mu_hats, V = op.k_eigendecomposition()
    if mu_hats[-1] <= 0:
        raise SingularGramError("K is numerically singular")
    root = np.sqrt(mu_hats)
    if V is None:
        middle = op.theta / np.outer(root, root)  # K diagonal
    else:
        inv_sqrt = V / root[None, :]
        middle = inv_sqrt.T @ op.theta @ inv_sqrt  # K^{-1/2} theta K^{-1/2} in V-coordinates
    gap = symmetrize(np.diag(mu_hats) - middle)
    return float(np.abs(np.linalg.eigvalsh(gap)).max())


def nullspace_width(op: SamplingOperator):
    """L2 width of Ker(Phi) within the unit Hilbert ball.

    Equals mu_{m+1} for basis truncation.  For time sampling no computable
    formula is available, so None is returned.
    """
    if op.variant == "truncation":
        return float(op.kernel.eigenvalue(op.m + 1))
    return None


def orthonormality_defect(Z) -> float:
    """max_{i,j} |<z_i, z_j> - delta_ij| over columns of Z."""
    Z = as_float_array(Z, "Z", ndim=2)
    r = Z.shape[1]
    return float(np.abs(Z.T @ Z - np.eye(r)).max())


def condition_b1(op: SamplingOperator, c0) -> bool:
    """Check theta <= c0 * K^2 in the PSD order (tolerance -1e-10)."""
    c0 = check_positive(c0, "c0")
    gap = symmetrize(c0 * (op.K @ op.K) - op.theta)
    return bool(np.linalg.eigvalsh(gap)[0] >= -1e-10)


def eigen_seminorm_gram(op: SamplingOperator, count=None) -> np.ndarray:
    """Diagnostic Gram of the first eigenfunctions under the sampled seminorm.

    Entry (i, j) is <psi_i, psi_j>_Phi = <Phi psi_i, Phi psi_j>.  Identity for
    basis truncation when count <= m; for time sampling it measures how far
    the design is from preserving L2 orthonormality.
    """
    count = op.m if count is None else int(count)
    coeffs = np.zeros((count, count))
    mu = op.kernel.eigenvalues(count)
    coeffs[np.arange(count), np.arange(count)] = 1.0 / np.sqrt(mu)  # psi_k in eigen coordinates
    Z = apply_to_components(op, coeffs)
    return Z.T @ Z


def representer_values(op: SamplingOperator, grid) -> np.ndarray:
    """Values phi_i(g) on a grid, shape (len(grid), m)."""
    g = np.atleast_1d(np.asarray(grid, dtype=float))
    if op.variant == "time":
        return np.asarray(op.kernel.evaluate(g[:, None], op.points[None, :]), dtype=float) / np.sqrt(op.m)
    ks = np.arange(1, op.m + 1)
    mu = op.kernel.eigenvalues(op.m)
    return np.asarray(op.kernel.eigenfunction(ks[None, :], g[:, None]), dtype=float) * mu[None, :]


def representer_eigen_cross_l2(op: SamplingOperator, kmax) -> np.ndarray:
    """L2 inner products <phi_i, psi_k>, shape (m, kmax).

    Uses the eigenrelation of the kernel integral operator: the L2 inner
    product of a kernel section K(., t) with psi_k is mu_k psi_k(t), so for
    time sampling the entry is mu_k psi_k(t_i) / sqrt(m); for truncation it is
    mu_i delta_ik.
    """
    kmax = int(kmax)
    mu = op.kernel.eigenvalues(kmax)
    if op.variant == "time":
        ks = np.arange(1, kmax + 1)
        basis = np.asarray(op.kernel.eigenfunction(ks[None, :], op.points[:, None]), dtype=float)
        return basis * mu[None, :] / np.sqrt(op.m)
    out = np.zeros((op.m, kmax))
    k = min(op.m, kmax)
    out[np.arange(k), np.arange(k)] = op.K.diagonal()[:k]
    return out
