"""Reproducible Gaussian sampling on a counter-based generator.

All randomness in the package flows through :func:`standard_normal`, which
draws 64-bit words from a Philox counter-based generator keyed by the seed and
maps them to normals through the inverse CDF.  Both steps are pure integer /
double arithmetic with no platform-dependent branching, so a given seed yields
bit-identical output across runs and platforms.
"""

import numpy as np
from scipy.special import ndtri

_MANTISSA_BITS = 53


def _generator(seed):
    return np.random.Generator(np.random.Philox(key=int(seed)))


def uniform_open(seed, size):
    """Uniform variates strictly inside (0, 1) with 53-bit resolution."""
    gen = _generator(seed)
    raw = gen.integers(0, 2**64, size=size, dtype=np.uint64)
    # (k + 1/2) / 2^53 over k in [0, 2^53): equidistributed, never 0 or 1.
    return ((raw >> np.uint64(64 - _MANTISSA_BITS)).astype(np.float64) + 0.5) * 2.0**-_MANTISSA_BITS


def standard_normal(seed, size):
    """Standard normal variates via the inverse CDF applied to Philox uniforms."""
    return ndtri(uniform_open(seed, size))
