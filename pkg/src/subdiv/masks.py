"""Finitely supported coefficient masks: symbols, norms, and factorizations.

A mask is a finite list of real coefficients anchored at an integer base
index; everything outside the stored range is zero.  Masks are immutable
values and all operations here are pure functions, so they are safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import NotConstantReproducing, NotFactorable

# Factorizations trim coefficients at or below this threshold: synthetic
# division leaves float dust that would otherwise break canonical form.
TRIM_TOL = 1e-14

# The reconstruction identity re-derived from a factorization must agree
# with the input this tightly, else an index bug is suspected.
_RECONSTRUCT_TOL = 1e-10

DEFAULT_TOL = 1e-12


def _trimmed(base: int, coeffs: Sequence[float], tol: float) -> tuple[int, tuple[float, ...]]:
    lo, hi = 0, len(coeffs)
    while lo < hi and abs(coeffs[lo]) <= tol:
        lo += 1
    while hi > lo and abs(coeffs[hi - 1]) <= tol:
        hi -= 1
    if lo == hi:
        return 0, ()
    return base + lo, tuple(float(c) for c in coeffs[lo:hi])


@dataclass(frozen=True)
class Mask:
    """Coefficient ``coeffs[p]`` sits at integer index ``base + p``.

    Canonical form is enforced on construction: leading and trailing exact
    zeros are dropped, so the first and last stored coefficients are nonzero
    unless the mask is the zero mask (empty ``coeffs``).
    """

    base: int = 0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        base, coeffs = _trimmed(self.base, tuple(self.coeffs), 0.0)
        object.__setattr__(self, "base", int(base))
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def support(self) -> tuple[int, int] | None:
        """Inclusive hull (first, last) of the stored coefficients, or None."""
        if self.is_zero:
            return None
        return self.base, self.base + len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, i: int) -> float:
        p = i - self.base
        if 0 <= p < len(self.coeffs):
            return self.coeffs[p]
        return 0.0

    def trimmed(self, tol: float = TRIM_TOL) -> "Mask":
        """Drop leading/trailing coefficients with magnitude <= tol."""
        base, coeffs = _trimmed(self.base, self.coeffs, tol)
        return Mask(base, coeffs)

    def __add__(self, other: "Mask") -> "Mask":
        return _combine(self, other, 1.0)

    def __sub__(self, other: "Mask") -> "Mask":
        return _combine(self, other, -1.0)

    def __mul__(self, scalar: float) -> "Mask":
        return Mask(self.base, tuple(scalar * c for c in self.coeffs))

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"base": self.base, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, obj: dict) -> "Mask":
        return cls(int(obj["base"]), tuple(float(c) for c in obj["coeffs"]))


def _combine(a: Mask, b: Mask, sign: float) -> Mask:
    """Coefficient-wise a + sign*b, aligned by absolute integer index."""
    if a.is_zero:
        return b * sign
    if b.is_zero:
        return a
    lo = min(a.base, b.base)
    hi = max(a.base + len(a) - 1, b.base + len(b) - 1)
    return Mask(lo, tuple(a[i] + sign * b[i] for i in range(lo, hi + 1)))


# Mask of the stationary scheme whose limits are piecewise-linear hats;
# the reference every perturbation is measured against.
LINEAR_BSPLINE = Mask(-1, (0.5, 1.0, 0.5))


def symbol_eval(m: Mask, z: complex) -> complex:
    """Evaluate the mask's Laurent polynomial sum_i m[i] * z**i.

    Returns a float for real z, complex otherwise.  z = 0 is outside the
    domain when the support reaches negative indices.
    """
    total = 0.0 if not isinstance(z, complex) else 0.0 + 0.0j
    for p, c in enumerate(m.coeffs):
        total += c * z ** (m.base + p)
    return total


def sup_norm(m: Mask) -> float:
    """Sup-norm of the subdivision operator with mask m.

    Equals the larger of the even-index and odd-index absolute coefficient
    sums; parity is taken on the absolute index, so it is base-sensitive.
    """
    even = odd = 0.0
    for p, c in enumerate(m.coeffs):
        if (m.base + p) % 2 == 0:
            even += abs(c)
        else:
            odd += abs(c)
    return max(even, odd)


def coeff_norm(m: Mask) -> float:
    """Sup-norm of the mask as a sequence: max |coefficient|."""
    return max((abs(c) for c in m.coeffs), default=0.0)


def parity_sums(m: Mask) -> tuple[float, float]:
    """(even, odd) plain coefficient sums over the absolute-index parities."""
    even = odd = 0.0
    for p, c in enumerate(m.coeffs):
        if (m.base + p) % 2 == 0:
            even += c
        else:
            odd += c
    return even, odd


def reproduces_constants(m: Mask, tol: float = DEFAULT_TOL) -> bool:
    """True iff the symbol vanishes at -1 and equals 2 at +1, within tol.

    Equivalently: both parity sums equal 1, which is what keeps all-ones
    data invariant under refinement.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return abs(symbol_eval(m, -1.0)) <= tol and abs(symbol_eval(m, 1.0) - 2.0) <= tol


def difference_mask(m: Mask, tol: float = DEFAULT_TOL) -> Mask:
    """Divide the symbol exactly by (1 + z): the mask acting on backward
    differences.

    Computed by the alternating partial-sum recurrence q[i] = m[i] - q[i-1],
    then cross-checked against the reconstruction m[i] = q[i] + q[i-1];
    disagreement beyond an internal tolerance indicates a bug, not bad input.
    Requires constant reproduction (the division must leave no remainder).
    """
    if not reproduces_constants(m, tol):
        even, odd = parity_sums(m)
        raise NotConstantReproducing(
            f"mask does not reproduce constants (parity sums {even!r}, {odd!r})"
        )
    acc = 0.0
    out = []
    for c in m.coeffs[:-1]:
        acc = c - acc
        out.append(acc)
    q = Mask(*_trimmed(m.base, out, TRIM_TOL))
    lo, hi = m.support  # type: ignore[misc]  # non-zero: it reproduces constants
    for i in range(lo, hi + 1):
        if abs(m[i] - (q[i] + q[i - 1])) > _RECONSTRUCT_TOL:
            raise RuntimeError(
                f"difference-mask reconstruction failed at index {i}; "
                "the two division routes disagree"
            )
    return q


def mask_from_difference(q: Mask) -> Mask:
    """Inverse of difference_mask: multiply the symbol by (1 + z)."""
    if q.is_zero:
        return q
    out = []
    prev = 0.0
    for c in q.coeffs:
        out.append(c + prev)
        prev = c
    out.append(prev)
    return Mask(q.base, tuple(out))


def perturbation_mask(a: Mask) -> Mask:
    """Coefficient-wise difference from the linear B-spline mask, aligned
    by absolute index."""
    return a - LINEAR_BSPLINE


def telescoped_mask(d: Mask, tol: float = DEFAULT_TOL) -> Mask:
    """Factor the symbol as d(z) = (1 - z^2) * e(z) and return e.

    e[i] accumulates d over the descending even-spaced tail, so the support
    of e ends two indices before d's.  Both symbol values d(1) and d(-1)
    must vanish within tol, otherwise the factorization has a remainder.
    """
    if d.is_zero:
        return d
    s1 = symbol_eval(d, 1.0)
    s2 = symbol_eval(d, -1.0)
    if abs(s1) > tol or abs(s2) > tol:
        raise NotFactorable(
            f"symbol values at +-1 are {s1!r}, {s2!r}; cannot factor out (1 - z^2)"
        )
    full = []
    for p, c in enumerate(d.coeffs):
        full.append(c + (full[p - 2] if p >= 2 else 0.0))
    # The top two accumulated values are the full parity-class sums, which
    # the symbol conditions force to ~0; they sit outside the provable
    # support and are dropped.
    tail_err = max(abs(v) for v in full[-2:])
    if tail_err > max(tol * 1.0625, TRIM_TOL):
        raise RuntimeError(
            f"telescoping residual {tail_err!r} exceeds tolerance despite "
            "symbol preconditions; internal inconsistency"
        )
    e = Mask(*_trimmed(d.base, full[:-2], TRIM_TOL))
    check_tol = max(_RECONSTRUCT_TOL, tol * 1.0625)
    positions = set()
    if d.support:
        positions.update(range(d.support[0], d.support[1] + 1))
    if e.support:
        positions.update(range(e.support[0] + 2, e.support[1] + 3))
    for i in positions:
        if abs(d[i] - (e[i] - e[i - 2])) > check_tol:
            raise RuntimeError(
                f"telescoping identity failed at index {i}; internal inconsistency"
            )
    return e
