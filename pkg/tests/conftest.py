"""Shared oracles for the test suite.

Every oracle here is an independent route to the quantity under test:
polynomial long division instead of the alternating-sum recurrence,
dictionary-based stencil sums instead of the convolution kernel, and the
closed-form quadratic B-spline for limit checks.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from subdiv.masks import Mask
from subdiv.operators import Window


def polydiv_by_1_plus_z(m: Mask) -> Mask:
    """Divide the symbol by (1 + z) via numpy's polynomial long division."""
    desc = list(m.coeffs[::-1])
    quot, rem = np.polydiv(desc, [1.0, 1.0])
    assert np.max(np.abs(rem)) < 1e-9, "division left a remainder"
    return Mask(m.base, tuple(quot[::-1]))


def brute_apply(m: Mask, f: Window, arity: int = 2) -> Window:
    """Stencil-by-stencil evaluation of the subdivision rule."""
    lo, hi = f.start, f.stop - 1
    mb, mt = m.support
    values = {}
    for i in range(arity * lo + mb - 4, arity * hi + mt + 5):
        jmin = math.ceil((i - mt) / arity)
        jmax = math.floor((i - mb) / arity)
        if jmin < lo or jmax > hi:
            continue
        values[i] = sum(m[i - arity * j] * f.value_at(j) for j in range(jmin, jmax + 1))
    idx = sorted(values)
    assert idx == list(range(idx[0], idx[-1] + 1))
    return Window(idx[0], [values[i] for i in idx])


def random_window(rng, length: int = 40, lo: int = -20) -> Window:
    return Window(lo, rng.uniform(-1.0, 1.0, length))


def random_mask(rng, max_len: int = 7) -> Mask:
    n = int(rng.integers(1, max_len + 1))
    base = int(rng.integers(-4, 4))
    coeffs = rng.uniform(-1.0, 1.0, n)
    return Mask(base, tuple(coeffs))


def random_cr_mask(rng, max_support: int = 9) -> Mask:
    """Random constant-reproducing mask, built as (1+z) times a random
    polynomial normalized to value 1 at z = 1 (an independent construction,
    not the library's factorization)."""
    n = int(rng.integers(1, max_support))
    base = int(rng.integers(-4, 4))
    coeffs = rng.uniform(-1.0, 1.0, n)
    while abs(coeffs.sum()) < 0.1:
        coeffs = rng.uniform(-1.0, 1.0, n)
    coeffs = coeffs / coeffs.sum()
    lifted = np.convolve(coeffs, [1.0, 1.0])
    return Mask(base, tuple(lifted))


def bspline2(x: float) -> float:
    """The quadratic B-spline supported on [0, 3]."""
    if 0.0 <= x < 1.0:
        return 0.5 * x * x
    if 1.0 <= x < 2.0:
        return 0.5 * (-2.0 * x * x + 6.0 * x - 3.0)
    if 2.0 <= x < 3.0:
        return 0.5 * (3.0 - x) ** 2
    return 0.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
