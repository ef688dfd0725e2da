"""Projector-based subspace distances in R^m and in L2.

The discrete distance between subspaces spanned by orthonormal Z1, Z2 is the
Hilbert-Schmidt norm of the difference of their orthogonal projectors,
sqrt(r1 + r2 - 2 ||Z1^T Z2||_F^2), evaluated through projection residuals so
both tiny and maximal separations come out at full precision; it equals
sqrt(2 sum sin^2 theta_k) over the principal angles.  Function subspaces are
compared the same way after orthonormalizing each basis in the L2 inner
product, with all L2 Grams available in closed form for the built-in
operators and eigen expansions.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import IllConditionedGramError, NotOrthonormalError
from .estimator import FunctionSubspace
from .kernels import Kernel
from .model import component_l2_gram
from .sampling import SamplingOperator, representer_eigen_cross_l2
from .validation import as_float_array, check_orthonormal, symmetrize

GRAM_CONDITION_LIMIT = 1e12


def subspace_distance(Z1, Z2, *, tol=1e-8) -> float:
    """Hilbert-Schmidt distance ||P_1 - P_2||_HS between column spans.

    Columns must be orthonormal within ``tol`` (NotOrthonormalError
    otherwise).  The subspaces may have different dimensions.
    """
    Z1 = check_orthonormal(Z1, "Z1", tol=tol)
    Z2 = check_orthonormal(Z2, "Z2", tol=tol)
    if Z1.shape[0] != Z2.shape[0]:
        raise ValueError("subspaces live in different ambient dimensions")
    # r1 + r2 - 2 ||Z1^T Z2||_F^2 rewritten as the two projection residuals;
    # algebraically identical but free of cancellation when the spans agree
    M = Z1.T @ Z2
    res1 = float(np.sum((Z1 - Z2 @ M.T) ** 2))
    res2 = float(np.sum((Z2 - Z1 @ M) ** 2))
    return float(np.sqrt(max(res1 + res2, 0.0)))


def principal_angles(Z1, Z2, *, tol=1e-8) -> np.ndarray:
    """Principal angles in [0, pi/2] between two equal-dimension subspaces.

    Returned sorted ascending; they satisfy
    subspace_distance^2 = 2 sum_k sin^2 theta_k.
    """
    Z1 = check_orthonormal(Z1, "Z1", tol=tol)
    Z2 = check_orthonormal(Z2, "Z2", tol=tol)
    if Z1.shape != Z2.shape:
        raise NotOrthonormalError("principal angles need equal shapes on both sides")
    sigma = np.linalg.svd(Z1.T @ Z2, compute_uv=False)
    return np.sort(np.arccos(np.clip(sigma, 0.0, 1.0)))


@dataclass(frozen=True)
class L2GramContext:
    """L2 inner-product machinery tied to one sampling operator.

    ``theta`` is the representer L2 Gram; cross Grams against eigen
    expansions use the integral-operator eigenrelation (the L2 product of a
    kernel section with psi_k is mu_k psi_k(t)), closed-form for both
    built-in operators.
    """

    operator: SamplingOperator
    theta: np.ndarray
    kernel: Kernel

    def cross_with_eigen(self, kmax) -> np.ndarray:
        """Matrix of <phi_i, psi_k>_L2, shape (m, kmax)."""
        return representer_eigen_cross_l2(self.operator, kmax)


def l2_context(op: SamplingOperator) -> L2GramContext:
    return L2GramContext(operator=op, theta=op.theta, kernel=op.kernel)


def _coerce_subspace(F, ctx: L2GramContext):
    """Return ("rep"|"eig", coefficient matrix) for a function subspace input.

    Accepts a FunctionSubspace (representer coefficients) or an eigen-basis
    coefficient matrix of shape (kmax, r) / list of coefficient vectors.
    """
    if isinstance(F, FunctionSubspace):
        if F.operator is not ctx.operator and F.operator.descriptor() != ctx.operator.descriptor():
            raise ValueError("FunctionSubspace belongs to a different operator than the context")
        return "rep", F.coeffs
    if isinstance(F, (list, tuple)):
        F = np.column_stack([as_float_array(c, "component", ndim=1) for c in F])
    A = as_float_array(F, "subspace coefficients", ndim=2)
    return "eig", A


def _l2_gram(kind, A, ctx):
    if kind == "rep":
        return symmetrize(A.T @ ctx.theta @ A)
    return symmetrize(component_l2_gram(ctx.kernel, A))


def _l2_cross(kind1, A1, kind2, A2, ctx):
    if kind1 == "rep" and kind2 == "rep":
        return A1.T @ ctx.theta @ A2
    if kind1 == "eig" and kind2 == "eig":
        kmax = max(A1.shape[0], A2.shape[0])
        mu = ctx.kernel.eigenvalues(kmax)
        P1 = np.zeros((kmax, A1.shape[1]))
        P1[: A1.shape[0]] = A1
        P2 = np.zeros((kmax, A2.shape[1]))
        P2[: A2.shape[0]] = A2
        return P1.T @ (mu[:, None] * P2)
    if kind1 == "rep" and kind2 == "eig":
        cross = ctx.cross_with_eigen(A2.shape[0])  # (m, kmax): <phi_i, psi_k>
        mu = ctx.kernel.eigenvalues(A2.shape[0])
        return A1.T @ cross @ (np.sqrt(mu)[:, None] * A2)
    return _l2_cross(kind2, A2, kind1, A1, ctx).T


def _l2_orthonormalize(kind, A, ctx):
    """Cholesky-orthonormalize a basis in the L2 metric; returns new coefficients."""
    G = _l2_gram(kind, A, ctx)
    w = np.linalg.eigvalsh(G)
    if w[0] <= 0 or w[-1] / w[0] > GRAM_CONDITION_LIMIT:
        raise IllConditionedGramError(
            f"L2 Gram condition number exceeds {GRAM_CONDITION_LIMIT:.0e} "
            f"(eigenvalues in [{w[0]:.3e}, {w[-1]:.3e}])"
        )
    L = np.linalg.cholesky(G)
    # A L^{-T} has L2-orthonormal columns
    return solve_triangular(L, A.T, lower=True).T


def function_subspace_distance(F1, F2, ctx: L2GramContext) -> float:
    """Hilbert-Schmidt distance between function subspaces in the L2 metric.

    Each argument is a FunctionSubspace or an eigen-basis coefficient matrix;
    both bases are L2-orthonormalized through their Gram Cholesky factors and
    the distance is sqrt(r1 + r2 - 2 ||M||_F^2) with M the cross-Gram of the
    orthonormalized bases.
    """
    kind1, A1 = _coerce_subspace(F1, ctx)
    kind2, A2 = _coerce_subspace(F2, ctx)
    B1 = _l2_orthonormalize(kind1, A1, ctx)
    B2 = _l2_orthonormalize(kind2, A2, ctx)
    M = _l2_cross(kind1, B1, kind2, B2, ctx)
    r1, r2 = B1.shape[1], B2.shape[1]
    return float(np.sqrt(max(r1 + r2 - 2.0 * float(np.sum(M**2)), 0.0)))
