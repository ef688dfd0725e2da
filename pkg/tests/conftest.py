"""Shared oracles and helpers for the test suite.

The quadrature, enumeration, and brute-force helpers here are deliberately
independent of the library's computational paths: they integrate with
composite Simpson panels, enumerate candidates, or optimize directly, so that
closed forms and eigen-route results are checked against a second route.
"""

import numpy as np
import pytest

from sampled_fpca import rng


def simpson(f, a, b, panels):
    """Composite Simpson quadrature with ``panels`` parabolic panels."""
    xs = np.linspace(a, b, 2 * panels + 1)
    w = np.ones_like(xs)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (6.0 * panels) * np.sum(w * np.asarray(f(xs), dtype=float)))


def simpson_matrix(fs, gs, panels=2000):
    """Gram matrix of callables under the L2 inner product, by Simpson."""
    out = np.empty((len(fs), len(gs)))
    for i, f in enumerate(fs):
        for j, g in enumerate(gs):
            out[i, j] = simpson(lambda u: f(u) * g(u), 0.0, 1.0, panels)
    return out


def random_orthonormal(seed, m, r):
    return np.linalg.qr(rng.standard_normal(seed, (m, r)))[0]


def random_spd(seed, m, *, cond=None):
    """Random symmetric positive definite matrix with controllable spectrum."""
    Q = random_orthonormal(seed, m, m)
    if cond is None:
        vals = 0.5 + rng.uniform_open(seed + 1, m)
    else:
        vals = np.logspace(0, -np.log10(cond), m)
    return (Q * vals) @ Q.T


@pytest.fixture(scope="session")
def sobolev():
    from sampled_fpca import sobolev1_kernel

    return sobolev1_kernel()
