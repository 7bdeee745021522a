"""Refinement engine: iterate masks on finite data, track backward
differences, evaluate piecewise-linear interpolants, and measure the decay
that convergence certificates promise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyOutput, InvalidParameter, OutOfDomain
from .masks import difference_mask, reproduces_constants
from .operators import Window, apply
from .schemes import ConvergenceCertificate, SchemeSpec

# The two routes to the refined differences (difference of values vs the
# difference rule applied to old differences) must agree this tightly.
_COMMUTE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RefinementState:
    """Values attached to the dyadic grid 2**-level * Z, on a finite valid
    index interval, with cached backward differences."""

    level: int
    window: Window
    deltas: Window

    @property
    def grid_scale(self) -> float:
        return math.ldexp(1.0, -self.level)

    def xs(self) -> np.ndarray:
        """x-coordinates of the valid indices."""
        return np.ldexp(self.window.indices().astype(float), -self.level)

    def x_span(self) -> tuple[float, float]:
        return (
            math.ldexp(float(self.window.start), -self.level),
            math.ldexp(float(self.window.stop - 1), -self.level),
        )

    def delta_sup(self) -> float:
        return self.deltas.sup()


def make_state(window: Window, level: int = 0) -> RefinementState:
    return RefinementState(level=level, window=window, deltas=window.diff())


def impulse(halfwidth: int = 8, level: int = 0) -> RefinementState:
    """Unit impulse at index 0 padded with zeros on [-halfwidth, halfwidth]."""
    if halfwidth < 1:
        raise InvalidParameter("halfwidth must be at least 1")
    values = np.zeros(2 * halfwidth + 1)
    values[halfwidth] = 1.0
    return make_state(Window(-halfwidth, values), level)


def constant(value: float = 1.0, halfwidth: int = 8, level: int = 0) -> RefinementState:
    return make_state(Window(-halfwidth, np.full(2 * halfwidth + 1, value)), level)


def refine_once(state: RefinementState, scheme: SchemeSpec) -> RefinementState:
    """One refinement step: apply the level mask, move to the finer grid.

    When the level mask reproduces constants, the refreshed differences are
    cross-checked against the difference rule applied to the cached ones;
    disagreement indicates an indexing bug and raises RuntimeError.
    """
    if state.level < scheme.k0:
        raise InvalidParameter(
            f"state level {state.level} precedes the scheme's start {scheme.k0}"
        )
    m = scheme.mask_at(state.level)
    new_window = apply(m, state.window)
    new_deltas = new_window.diff()
    if reproduces_constants(m) and len(state.deltas) > 0:
        try:
            via_rule = apply(difference_mask(m), state.deltas)
        except EmptyOutput:
            via_rule = None
        if via_rule is not None:
            lo = max(via_rule.start, new_deltas.start)
            hi = min(via_rule.stop, new_deltas.stop)
            if lo < hi:
                a = via_rule.values[lo - via_rule.start : hi - via_rule.start]
                b = new_deltas.values[lo - new_deltas.start : hi - new_deltas.start]
                err = float(np.max(np.abs(a - b))) if len(a) else 0.0
                if err > _COMMUTE_TOL:
                    raise RuntimeError(
                        f"difference rule disagrees with refined differences "
                        f"by {err!r} at level {state.level}"
                    )
    return RefinementState(state.level + 1, new_window, new_deltas)


@dataclass(frozen=True, eq=False)
class PLFunction:
    """Piecewise-linear interpolant of a value window on its dyadic grid."""

    level: int
    window: Window

    def domain(self) -> tuple[float, float]:
        return (
            math.ldexp(float(self.window.start), -self.level),
            math.ldexp(float(self.window.stop - 1), -self.level),
        )

    def __call__(self, x: float) -> float:
        return pl_eval(self, x)


def pl_function(state: RefinementState) -> PLFunction:
    return PLFunction(state.level, state.window)


def pl_eval(f: PLFunction, x: float) -> float:
    """Linear interpolation between the bracketing grid points."""
    t = math.ldexp(float(x), f.level)
    start, last = f.window.start, f.window.stop - 1
    if not start <= t <= last:
        lo, hi = f.domain()
        raise OutOfDomain(f"x = {x!r} outside the valid span [{lo!r}, {hi!r}]")
    v = f.window.values
    if start == last:
        return float(v[0])
    i = min(int(math.floor(t)), last - 1)
    frac = t - i
    return float((1.0 - frac) * v[i - start] + frac * v[i - start + 1])


def _pl_gap(coarse: Window, fine: Window) -> float:
    """Sup distance between the interpolants of consecutive levels.

    Both are piecewise linear with nested breakpoints, so the maximum of
    their difference is attained at the finer grid's breakpoints; those are
    evaluated exactly (grid values on the fine side, midpoint averages on
    the coarse side).  Restricted to the common x-span.
    """
    lo = max(fine.start, 2 * coarse.start)
    hi = min(fine.stop - 1, 2 * (coarse.stop - 1))
    if lo > hi:
        return 0.0
    idx = np.arange(lo, hi + 1)
    fv = fine.values[lo - fine.start : hi - fine.start + 1]
    cv = coarse.values
    left = cv[(idx - 1) // 2 - coarse.start]
    right = cv[(idx + 1) // 2 - coarse.start]
    coarse_at_fine = 0.5 * (left + right)  # even indices: both halves agree
    return float(np.max(np.abs(fv - coarse_at_fine)))


def cauchy_norm(scheme: SchemeSpec, state: RefinementState) -> float:
    """Sup distance between this level's interpolant and the next one's."""
    nxt = refine_once(state, scheme)
    return _pl_gap(state.window, nxt.window)


@dataclass(frozen=True, eq=False)
class DecayReport:
    """Per-level difference and interpolant-gap norms, the fitted decay
    rates, and (when a certificate is supplied) the certified bounds.

    ``rho_emp`` is the per-level factor fitted to the interpolant gaps --
    the series whose geometric decay is what convergence means.  The
    difference norms can keep shrinking on a divergent scheme (a drifting
    constant mode never shows up in differences), so their fitted factor
    is reported separately as ``rho_delta``.
    """

    start_level: int
    ks: tuple[int, ...]
    delta_norms: tuple[float, ...]
    cauchy_norms: tuple[float, ...]
    rho_emp: float | None
    rho_delta: float | None
    delta_bounds: tuple[float, ...] | None = None
    cauchy_bounds: tuple[float, ...] | None = None
    bounds_hold: bool | None = None

    @property
    def non_contractive(self) -> bool:
        return self.rho_emp is not None and self.rho_emp >= 1.0

    def rows(self) -> list[tuple[int, float, float, float | None]]:
        """(k, delta_norm, cauchy_norm, bound) rows for CSV output; the
        bound column is the certified interpolant-gap bound."""
        out = []
        for i, k in enumerate(self.ks):
            bound = self.cauchy_bounds[i] if self.cauchy_bounds else None
            out.append((k, self.delta_norms[i], self.cauchy_norms[i], bound))
        return out

    def to_dict(self) -> dict:
        return {
            "start_level": self.start_level,
            "k": list(self.ks),
            "delta_norm": list(self.delta_norms),
            "cauchy_norm": list(self.cauchy_norms),
            "rho_emp": self.rho_emp,
            "rho_delta": self.rho_delta,
            "delta_bound": list(self.delta_bounds) if self.delta_bounds else None,
            "cauchy_bound": list(self.cauchy_bounds) if self.cauchy_bounds else None,
            "bounds_hold": self.bounds_hold,
            "non_contractive": self.non_contractive,
        }


def _fit_rate(ks: tuple[int, ...], vals: tuple[float, ...]) -> float | None:
    """Least-squares per-level decay factor over the last half of levels
    (the early levels carry the pre-asymptotic transient)."""
    half = len(ks) // 2
    pts = [(k, v) for k, v in zip(ks[half:], vals[half:]) if v > 0]
    if len(pts) < 2:
        return None
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(np.exp(slope))


def decay_report(
    scheme: SchemeSpec,
    initial: RefinementState,
    k_max: int,
    certificate: ConvergenceCertificate | None = None,
) -> DecayReport:
    """Tabulate difference norms and interpolant gaps up to level k_max.

    Divergence is a reported outcome, never an error.  With a certificate,
    each level is checked against C1 * mu_hat**k * ||initial differences||
    for the differences and Gamma * mu_hat**k * ... for the gaps.
    """
    if k_max < initial.level + 4:
        raise InvalidParameter("k_max must allow at least 4 levels")
    states = [initial]
    s = initial
    while s.level <= k_max:
        s = refine_once(s, scheme)
        states.append(s)
    ks = tuple(range(initial.level, k_max + 1))
    delta_norms = tuple(st.delta_sup() for st in states[: len(ks)])
    cauchy_norms = tuple(
        _pl_gap(states[i].window, states[i + 1].window) for i in range(len(ks))
    )
    rho = _fit_rate(ks, cauchy_norms)
    rho_delta = _fit_rate(ks, delta_norms)

    delta_bounds = cauchy_bounds = None
    bounds_hold = None
    if certificate is not None:
        d0 = initial.delta_sup()
        delta_bounds = tuple(
            certificate.C1 * certificate.mu_hat ** k * d0 for k in ks
        )
        cauchy_bounds = tuple(
            certificate.Gamma * certificate.mu_hat ** k * d0 for k in ks
        )
        bounds_hold = all(
            m <= b for m, b in zip(delta_norms, delta_bounds)
        ) and all(m <= b for m, b in zip(cauchy_norms, cauchy_bounds))
    return DecayReport(
        start_level=initial.level, ks=ks, delta_norms=delta_norms,
        cauchy_norms=cauchy_norms, rho_emp=rho, rho_delta=rho_delta,
        delta_bounds=delta_bounds, cauchy_bounds=cauchy_bounds,
        bounds_hold=bounds_hold,
    )


@dataclass(frozen=True, eq=False)
class LimitSample:
    """Grid samples of a deeply refined state, standing in for the limit
    function; ``error_bound`` is the certified sup-distance to the true
    limit when a certificate was supplied."""

    level: int
    xs: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    error_bound: float | None = None

    @property
    def peak(self) -> float:
        return float(np.max(self.values))


def limit_sample(
    scheme: SchemeSpec,
    initial: RefinementState,
    depth: int,
    certificate: ConvergenceCertificate | None = None,
) -> LimitSample:
    """Refine to level ``depth`` and return (x, value) samples."""
    if depth < max(1, initial.level + 1):
        raise InvalidParameter("depth must exceed the starting level")
    d0 = initial.delta_sup()
    s = initial
    while s.level < depth:
        s = refine_once(s, scheme)
    bound = None
    if certificate is not None:
        bound = certificate.C * certificate.mu_hat ** depth * d0
    return LimitSample(
        level=depth, xs=s.xs(), values=np.array(s.window.values),
        error_bound=bound,
    )
