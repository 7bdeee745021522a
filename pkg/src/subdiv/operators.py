"""Subdivision operators on finite windows: application, composition of
level rules into higher-arity products, operator norms, and the windowed
contraction search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractionNotFound, EmptyOutput, InvalidParameter, NotConstantReproducing
from .masks import Mask, difference_mask


class Window:
    """A finite run of values on consecutive integer indices.

    ``values[0]`` sits at index ``start``.  The array is frozen; windows are
    treated as immutable values throughout the library.
    """

    __slots__ = ("start", "values")

    def __init__(self, start: int, values):
        self.start = int(start)
        arr = np.array(values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("window values must be one-dimensional")
        arr.setflags(write=False)
        self.values = arr

    @property
    def stop(self) -> int:
        """Exclusive upper index."""
        return self.start + len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def value_at(self, i: int) -> float:
        p = i - self.start
        if not 0 <= p < len(self.values):
            raise IndexError(f"index {i} outside window [{self.start}, {self.stop})")
        return float(self.values[p])

    def diff(self) -> "Window":
        """Backward differences; defined one index later than the values."""
        return Window(self.start + 1, np.diff(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def __repr__(self) -> str:
        return f"Window(start={self.start}, n={len(self.values)})"


def apply(m: Mask, f: Window, arity: int = 2) -> Window:
    """Apply the subdivision rule with mask ``m`` to a finite window.

    With dilation ``arity`` = A the output at index i is sum_j m[i - A*j] f[j].
    Only indices whose whole stencil lies inside ``f`` are produced, so the
    valid index range shrinks deterministically; no boundary data is ever
    fabricated.  Raises EmptyOutput when the input is too short for a single
    fully supported value.
    """
    if m.is_zero:
        raise InvalidParameter("cannot apply a zero mask: it has no stencil")
    if arity < 2:
        raise InvalidParameter("arity must be at least 2")
    lo, hi = f.start, f.stop - 1
    if hi < lo:
        raise EmptyOutput("empty input window")
    mb, mt = m.support  # type: ignore[misc]
    out_lo = arity * lo + mt - arity + 1
    out_hi = arity * hi + mb + arity - 1
    n_out = out_hi - out_lo + 1
    if n_out <= 0:
        need = -(mb - mt - arity + 2) // arity + 1
        raise EmptyOutput(
            f"window of {len(f)} values is too short for mask support "
            f"[{mb}, {mt}] at arity {arity}; need at least {need} values"
        )
    up = np.zeros(arity * (len(f) - 1) + 1)
    up[::arity] = f.values
    conv = np.convolve(up, np.asarray(m.coeffs))
    # conv[p] holds the value at absolute index arity*lo + mb + p.
    src_lo = len(m) - arity
    if src_lo >= 0:
        out = conv[src_lo : src_lo + n_out]
    else:
        # Mask shorter than the arity: the extreme valid indices have an
        # empty stencil and are zero.
        out = np.zeros(n_out)
        out[-src_lo : -src_lo + len(conv)] = conv
    return Window(out_lo, out)


@dataclass(frozen=True, eq=False)
class ProductOperator:
    """Composition of ``levels`` arity-2 rules collapsed into one stencil
    of arity 2**levels.  For levels = 1 it is the plain rule itself."""

    mask: Mask
    levels: int = 1

    @property
    def arity(self) -> int:
        return 2 ** self.levels

    def apply(self, f: Window) -> Window:
        return apply(self.mask, f, self.arity)


def compose(outer: ProductOperator, inner: ProductOperator) -> ProductOperator:
    """Collapse outer . inner (inner acts first) into one operator.

    The combined symbol is outer(z) * inner(z**A) with A the outer arity;
    arities multiply.
    """
    if outer.mask.is_zero or inner.mask.is_zero:
        return ProductOperator(Mask(), outer.levels + inner.levels)
    arity = outer.arity
    up = np.zeros(arity * (len(inner.mask) - 1) + 1)
    up[::arity] = inner.mask.coeffs
    coeffs = np.convolve(np.asarray(outer.mask.coeffs), up)
    base = outer.mask.base + arity * inner.mask.base
    return ProductOperator(Mask(base, tuple(coeffs)), outer.levels + inner.levels)


def residue_class_norm(m: Mask, arity: int) -> float:
    """Max over residue classes mod arity of the absolute coefficient sums.

    This is the sup-norm of the arity-``arity`` operator with stencil m;
    residues are taken on absolute indices, so the result is base-sensitive.
    """
    if arity < 1:
        raise InvalidParameter("arity must be positive")
    sums = [0.0] * arity
    for p, c in enumerate(m.coeffs):
        sums[(m.base + p) % arity] += abs(c)
    return max(sums) if sums else 0.0


def compose_all(masks: Sequence[Mask]) -> ProductOperator:
    """Compose arity-2 rules; the LAST mask in the list acts first."""
    if not masks:
        raise InvalidParameter("empty operator product")
    op = ProductOperator(masks[-1], 1)
    for m in masks[-2::-1]:
        op = compose(ProductOperator(m, 1), op)
    return op


def product_norm(masks: Sequence[Mask]) -> float:
    """Sup-norm of the composed operator; the last mask acts first."""
    op = compose_all(masks)
    return residue_class_norm(op.mask, op.arity)


@dataclass(frozen=True)
class ContractionWitness:
    """Evidence that n-fold products of difference rules contract.

    ``mu`` is the maximum product norm over the ``window`` start levels
    actually checked (for witnesses produced by the search), or a certified
    upper bound on those norms (for witnesses produced by transfer from a
    comparator scheme).  ``windowed`` is False only when the scheme is
    stationary and the single computed product makes the sup exact.
    """

    K: int
    n: int
    mu: float
    window: int
    windowed: bool

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "n": self.n,
            "mu": self.mu,
            "window": self.window,
            "windowed": self.windowed,
        }


def _difference_mask_at(scheme, k: int, tol: float) -> Mask:
    try:
        return difference_mask(scheme.mask_at(k), tol)
    except NotConstantReproducing as exc:
        raise NotConstantReproducing(f"level {k}: {exc}", level=k) from None


def _scan_levels(scheme, n_max: int, K_max: int, window: int) -> tuple[int, int]:
    """(first, last) level whose difference mask the scan may touch."""
    first = scheme.k0
    last = scheme.k0 + K_max + window + n_max - 1
    if scheme.max_level is not None:
        last = min(last, scheme.max_level)
    return first, last


def condition_a_search(
    scheme,
    n_max: int = 8,
    K_max: int = 32,
    window: int = 64,
    tol: float = 1e-12,
) -> ContractionWitness:
    """Search for a contracting product of difference rules.

    Scans product lengths n = 1..n_max (outer) and start levels
    K = k0..k0+K_max (inner), computing for each pair the maximum product
    norm over start levels k in [K, K + window], and returns the first pair
    whose maximum drops below 1.  Smallest n wins ties, then smallest K;
    the order is part of the contract because n drives the decay-rate
    estimate.  For stationary schemes the product norm does not depend on
    the start level, so a single product per n is exact and the witness is
    not windowed.

    Raises NotConstantReproducing if any scanned level lacks a difference
    rule, and ContractionNotFound (with the scanned table attached) when no
    pair succeeds; the latter is inconclusive, not a disproof.
    """
    if n_max < 1 or window < 1 or K_max < 0:
        raise InvalidParameter("n_max and window must be >= 1, K_max >= 0")
    k0 = scheme.k0
    if scheme.kind == "stationary":
        q = _difference_mask_at(scheme, k0, tol)
        scan = []
        for n in range(1, n_max + 1):
            mu = product_norm([q] * n)
            scan.append((n, k0, mu))
            if mu < 1.0:
                return ContractionWitness(K=k0, n=n, mu=mu, window=1, windowed=False)
        raise ContractionNotFound(
            f"no product length up to {n_max} contracts", scan=scan
        )

    first, last = _scan_levels(scheme, n_max, K_max, window)
    qs = {k: _difference_mask_at(scheme, k, tol) for k in range(first, last + 1)}
    scan = []
    for n in range(1, n_max + 1):
        top_start = last - n + 1
        if top_start < k0:
            break
        norms = {
            k: product_norm([qs[k + n - 1 - j] for j in range(n)])
            for k in range(k0, top_start + 1)
        }
        for K in range(k0, k0 + K_max + 1):
            ks = range(K, min(K + window, top_start) + 1)
            if not len(ks):
                break
            mu = max(norms[k] for k in ks)
            scan.append((n, K, mu))
            if mu < 1.0:
                return ContractionWitness(
                    K=K, n=n, mu=mu, window=len(ks), windowed=True
                )
    raise ContractionNotFound(
        f"no (K, n) with n <= {n_max}, K <= {k0 + K_max} contracts "
        f"over a window of {window}",
        scan=scan,
    )


def contraction_scan(
    scheme,
    n_max: int = 8,
    K_max: int = 32,
    window: int = 64,
    tol: float = 1e-12,
) -> list[tuple[int, int, float]]:
    """All (n, K, mu) cells the search would consider, without early exit.

    Stationary schemes report one row per n (K pinned at k0).
    """
    k0 = scheme.k0
    if scheme.kind == "stationary":
        q = _difference_mask_at(scheme, k0, tol)
        return [(n, k0, product_norm([q] * n)) for n in range(1, n_max + 1)]
    first, last = _scan_levels(scheme, n_max, K_max, window)
    qs = {k: _difference_mask_at(scheme, k, tol) for k in range(first, last + 1)}
    out = []
    for n in range(1, n_max + 1):
        top_start = last - n + 1
        if top_start < k0:
            break
        norms = {
            k: product_norm([qs[k + n - 1 - j] for j in range(n)])
            for k in range(k0, top_start + 1)
        }
        for K in range(k0, k0 + K_max + 1):
            ks = range(K, min(K + window, top_start) + 1)
            if not len(ks):
                break
            out.append((n, K, max(norms[k] for k in ks)))
    return out
