"""Input validation helpers used across the package."""

import numpy as np

from .errors import NotOrthonormalError


def as_float_array(x, name="array", ndim=None):
    """Convert to a float64 ndarray, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def check_square(A, name="matrix"):
    A = as_float_array(A, name, ndim=2)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def symmetrize(A):
    """Average a nearly-symmetric matrix with its transpose to kill roundoff skew."""
    return 0.5 * (A + A.T)


def orthonormality_error(Z):
    """max |Z^T Z - I| entry, the departure of Z from orthonormal columns."""
    Z = as_float_array(Z, "Z", ndim=2)
    r = Z.shape[1]
    return float(np.abs(Z.T @ Z - np.eye(r)).max()) if r else 0.0


def check_orthonormal(Z, name="Z", tol=1e-8):
    Z = as_float_array(Z, name, ndim=2)
    if Z.shape[0] < Z.shape[1]:
        raise NotOrthonormalError(f"{name} has more columns than rows: {Z.shape}")
    err = orthonormality_error(Z)
    if err > tol:
        raise NotOrthonormalError(
            f"{name} columns are not orthonormal: max Gram error {err:.3e} > {tol:.0e}"
        )
    return Z


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be nonnegative and finite, got {value}")
    return value
