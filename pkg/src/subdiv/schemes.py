"""Level-indexed subdivision schemes and the convergence machinery:
boundedness estimates, asymptotic-similarity diagnostics, transfer of the
contraction condition from a comparator scheme, and certificates with
explicit error constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AlignmentMismatch,
    EtaOutOfRange,
    InvalidParameter,
    SimilarityNotEstablished,
    TailNotReached,
)
from .masks import Mask, coeff_norm, difference_mask, sup_norm
from .operators import (
    ContractionWitness,
    compose_all,
    condition_a_search,
    product_norm,
    residue_class_norm,
)

# Explicit compositions are kept exact up to this many factors; longer
# prefixes fall back to a submultiplicative chunked upper bound (the
# composed stencil grows like 2**length and becomes unrepresentable).
_EXACT_PRODUCT_CAP = 16


@dataclass(frozen=True)
class AnalyticSimilarity:
    """Closed-form knowledge a catalog scheme carries about its own decay
    towards a stationary base mask: whether the per-level perturbation is
    o(1), and whether it is summable."""

    base_mask: Mask
    eps_is_o1: bool
    eps_summable: bool


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    """A level-indexed source of masks.

    ``kind`` is one of "stationary", "table", "formula".  ``mask_at(k)`` is
    a pure function of k; every returned mask must fit in [-N, N].  Table
    schemes are only defined up to ``max_level``.  ``bound_hint`` asserts a
    known supremum of the coefficient sup-norms over all levels, replacing
    windowed estimates in the error constants.
    """

    kind: str
    k0: int
    N: int
    mask_fn: Callable[[int], Mask] = field(repr=False)
    name: str = ""
    bound_hint: float | None = None
    max_level: int | None = None
    analytic: AnalyticSimilarity | None = None
    descriptor: dict | None = None

    def mask_at(self, k: int) -> Mask:
        if k < self.k0:
            raise InvalidParameter(
                f"level {k} is below the scheme's starting level {self.k0}"
            )
        if self.max_level is not None and k > self.max_level:
            raise InvalidParameter(
                f"level {k} is beyond the scheme's table (last level {self.max_level})"
            )
        m = self.mask_fn(k)
        sup = m.support
        if sup is not None and (sup[0] < -self.N or sup[1] > self.N):
            raise InvalidParameter(
                f"mask at level {k} has support {sup}, outside [-{self.N}, {self.N}]"
            )
        return m

    def to_dict(self) -> dict:
        if self.descriptor is not None:
            return dict(self.descriptor)
        if self.kind == "stationary":
            return {
                "kind": "stationary",
                "mask": self.mask_at(self.k0).to_dict(),
                "N": self.N,
            }
        if self.kind == "table":
            assert self.max_level is not None
            return {
                "kind": "table",
                "masks": [
                    self.mask_at(k).to_dict()
                    for k in range(self.k0, self.max_level + 1)
                ],
                "k0": self.k0,
                "N": self.N,
            }
        raise InvalidParameter(
            "formula scheme has no serializable description; construct it "
            "through the catalog to attach one"
        )


def _default_locality(mask: Mask) -> int:
    sup = mask.support
    if sup is None:
        raise InvalidParameter("cannot infer locality of the zero mask")
    return max(abs(sup[0]), abs(sup[1]))


def stationary_scheme(
    mask: Mask,
    N: int | None = None,
    name: str = "",
    bound_hint: float | None = None,
) -> SchemeSpec:
    """Scheme applying the same mask at every level (k0 = 0)."""
    if N is None:
        N = _default_locality(mask)
    hint = coeff_norm(mask) if bound_hint is None else bound_hint
    return SchemeSpec(
        kind="stationary", k0=0, N=N, mask_fn=lambda k: mask, name=name,
        bound_hint=hint,
    )


def table_scheme(
    masks: Sequence[Mask],
    k0: int = 0,
    N: int | None = None,
    name: str = "",
) -> SchemeSpec:
    """Scheme reading masks from an explicit per-level table."""
    masks = tuple(masks)
    if not masks:
        raise InvalidParameter("table scheme needs at least one mask")
    if N is None:
        N = max(_default_locality(m) for m in masks)
    hint = max(coeff_norm(m) for m in masks)
    return SchemeSpec(
        kind="table", k0=k0, N=N,
        mask_fn=lambda k: masks[k - k0], name=name,
        bound_hint=hint, max_level=k0 + len(masks) - 1,
    )


def formula_scheme(
    mask_fn: Callable[[int], Mask],
    k0: int,
    N: int,
    name: str = "",
    bound_hint: float | None = None,
    max_level: int | None = None,
    analytic: AnalyticSimilarity | None = None,
    descriptor: dict | None = None,
) -> SchemeSpec:
    """Scheme whose level-k mask comes from a closed-form rule."""
    return SchemeSpec(
        kind="formula", k0=k0, N=N, mask_fn=mask_fn, name=name,
        bound_hint=bound_hint, max_level=max_level, analytic=analytic,
        descriptor=descriptor,
    )


def _clamp_range(scheme: SchemeSpec, k_lo: int, k_hi: int) -> tuple[int, int]:
    k_lo = max(k_lo, scheme.k0)
    if scheme.max_level is not None:
        k_hi = min(k_hi, scheme.max_level)
    if k_hi < k_lo:
        raise InvalidParameter(
            f"level range [{k_lo}, {k_hi}] is empty on this scheme's domain"
        )
    return k_lo, k_hi


@dataclass(frozen=True)
class BoundednessReport:
    coeff_sup: float
    operator_sup: float
    from_hint: bool
    k_lo: int
    k_hi: int

    def to_dict(self) -> dict:
        return {
            "coeff_sup": self.coeff_sup,
            "operator_sup": self.operator_sup,
            "from_hint": self.from_hint,
            "k_lo": self.k_lo,
            "k_hi": self.k_hi,
        }


def boundedness_estimate(scheme: SchemeSpec, k_range: tuple[int, int]) -> BoundednessReport:
    """Largest coefficient sup-norm and operator sup-norm over the scanned
    levels.  A ``bound_hint`` on the scheme replaces the coefficient scan
    (it asserts the true supremum over all levels, not just the window)."""
    k_lo, k_hi = _clamp_range(scheme, *k_range)
    if scheme.kind == "stationary":
        m = scheme.mask_at(k_lo)
        coeff, op = coeff_norm(m), sup_norm(m)
    else:
        masks = [scheme.mask_at(k) for k in range(k_lo, k_hi + 1)]
        coeff = max(coeff_norm(m) for m in masks)
        op = max(sup_norm(m) for m in masks)
    if scheme.bound_hint is not None:
        return BoundednessReport(scheme.bound_hint, op, True, k_lo, k_hi)
    return BoundednessReport(coeff, op, False, k_lo, k_hi)


@dataclass(frozen=True)
class SimilarityReport:
    """Windowed diagnostics for mask-difference decay between two schemes.

    ``similar`` is "yes" / "no" / "inconclusive"; ``equivalent`` is
    "summable" / "not-summable-in-window" / "inconclusive".  Verdicts are
    trend tests over the scanned window unless ``analytic`` is True, in
    which case a catalog scheme's closed-form decay flags decided them and
    the numeric table is corroborating evidence.
    """

    ks: tuple[int, ...]
    diffs: tuple[float, ...]
    partial_sums: tuple[float, ...]
    similar: str
    equivalent: str
    decay_fit: tuple[float, float] | None
    analytic: bool
    N: int
    tol: float

    @property
    def per_k_diff(self) -> list[tuple[int, float]]:
        return list(zip(self.ks, self.diffs))

    def to_dict(self) -> dict:
        return {
            "k": list(self.ks),
            "diff": list(self.diffs),
            "partial_sum": list(self.partial_sums),
            "similar": self.similar,
            "equivalent": self.equivalent,
            "decay_fit": list(self.decay_fit) if self.decay_fit else None,
            "analytic": self.analytic,
            "N": self.N,
            "tol": self.tol,
        }


def _loglog_fit(ks: Sequence[int], vals: Sequence[float]) -> tuple[float, float] | None:
    pts = [(k, v) for k, v in zip(ks, vals) if k > 0 and v > 0]
    if len(pts) < 4:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return float(np.exp(intercept)), float(slope)


def _analytic_flags(a: SchemeSpec, b: SchemeSpec, tol: float) -> AnalyticSimilarity | None:
    """a's closed-form decay flags, when b is stationary with a's base mask."""
    if a.analytic is None or b.kind != "stationary" or not a.analytic.eps_is_o1:
        return None
    if coeff_norm(b.mask_at(b.k0) - a.analytic.base_mask) <= tol:
        return a.analytic
    return None


def _shared_base(a: SchemeSpec, b: SchemeSpec, tol: float) -> bool:
    """Both schemes decay in closed form to the same stationary base, so
    they are similar to each other by the triangle inequality."""
    return (
        a.analytic is not None
        and b.analytic is not None
        and a.analytic.eps_is_o1
        and b.analytic.eps_is_o1
        and coeff_norm(a.analytic.base_mask - b.analytic.base_mask) <= tol
    )


def similarity_report(
    a: SchemeSpec,
    b: SchemeSpec,
    k_range: tuple[int, int],
    tol: float = 1e-12,
    N: int | None = None,
) -> SimilarityReport:
    """Per-level sup differences of the two mask families, with verdicts.

    The numeric 'yes' requires the last quarter of the window to sit below
    tol and not increase; 'no' requires the differences to stay above tol
    with no decay trend; anything else is inconclusive, because a finite
    window cannot prove a limit.  Catalog schemes whose perturbation decay
    is known in closed form short-circuit to analytic verdicts.
    """
    k_lo, k_hi = k_range
    if k_hi - k_lo + 1 < 8:
        raise InvalidParameter("similarity window must cover at least 8 levels")
    if N is None:
        N = max(a.N, b.N)
    ks, diffs, psums = [], [], []
    running = 0.0
    for k in range(k_lo, k_hi + 1):
        ma, mb = a.mask_at(k), b.mask_at(k)
        for m, owner in ((ma, "first"), (mb, "second")):
            sup = m.support
            if sup is not None and (sup[0] < -N or sup[1] > N):
                raise AlignmentMismatch(
                    f"{owner} scheme's level-{k} mask has support {sup}, "
                    f"outside the common interval [-{N}, {N}]"
                )
        d = coeff_norm(ma - mb)
        running += d
        ks.append(k)
        diffs.append(d)
        psums.append(running)

    count = len(ks)
    quarter = max(2, count // 4)
    tail = diffs[-quarter:]
    fit = _loglog_fit(ks[count // 2 :], diffs[count // 2 :])

    # Numeric trend verdicts; closed-form knowledge may override below.
    nonincreasing = all(
        tail[i + 1] <= tail[i] + 1e-15 for i in range(len(tail) - 1)
    )
    trending_down = tail[0] > 0 and tail[-1] < tail[0] * (1 - 1e-9)
    if max(tail) <= tol and nonincreasing:
        similar = "yes"
    elif min(diffs) > tol and not trending_down:
        similar = "no"
    else:
        similar = "inconclusive"
    if psums[-1] - psums[count - quarter] <= tol:
        equivalent = "summable"
    else:
        octave_from = max(ks[0], (ks[-1] + 1) // 2)
        idx = next(i for i, k in enumerate(ks) if k >= octave_from)
        equivalent = (
            "not-summable-in-window" if psums[-1] - psums[idx] > tol
            else "inconclusive"
        )

    analytic = False
    flags = _analytic_flags(a, b, tol) or _analytic_flags(b, a, tol)
    if flags is not None:
        similar = "yes"
        equivalent = "summable" if flags.eps_summable else "not-summable-in-window"
        analytic = True
    elif _shared_base(a, b, tol):
        similar = "yes"
        analytic = True
        if a.analytic.eps_summable and b.analytic.eps_summable:
            equivalent = "summable"
        # otherwise the pairwise sums are not determined by the flags;
        # keep the windowed verdict

    return SimilarityReport(
        ks=tuple(ks), diffs=tuple(diffs), partial_sums=tuple(psums),
        similar=similar, equivalent=equivalent, decay_fit=fit,
        analytic=analytic, N=N, tol=tol,
    )


def _product_op(scheme: SchemeSpec, k: int, n: int, tol: float):
    """Composed operator of the difference rules for levels k .. k+n-1."""
    from .operators import _difference_mask_at

    return compose_all([_difference_mask_at(scheme, k + n - 1 - j, tol) for j in range(n)])


def _transfer(
    target: SchemeSpec,
    comparator: SchemeSpec,
    witness_star: ContractionWitness,
    k_range: tuple[int, int],
    tol: float,
    mu: float | None,
) -> tuple[ContractionWitness, dict]:
    from .operators import _difference_mask_at

    mu_star, n = witness_star.mu, witness_star.n
    if not mu_star < 1.0:
        raise InvalidParameter("comparator witness does not contract (mu* >= 1)")
    k_lo, k_hi = k_range
    k_lo = max(k_lo, target.k0, comparator.k0)
    for scheme in (target, comparator):
        if scheme.max_level is not None:
            k_hi = min(k_hi, scheme.max_level - (n - 1))
    if k_hi < k_lo:
        raise InvalidParameter("transfer window is empty after clamping to domains")

    stationary_target = target.kind == "stationary"
    if mu is None:
        mu = (1.0 + mu_star) / 2.0
    lo_ok = mu >= mu_star if stationary_target else mu > mu_star
    if not (lo_ok and mu < 1.0):
        raise InvalidParameter(
            f"mu = {mu!r} must lie in ({mu_star!r}, 1) "
            "(closed at the left end only for stationary targets)"
        )
    eps = (mu - mu_star) / 2.0

    # Constant reproduction on every scanned target level, checked before
    # similarity so the failure reported first is the binding one.
    target_q = {
        k: _difference_mask_at(target, k, tol)
        for k in range(k_lo, k_hi + n)
    }
    sim = similarity_report(target, comparator, (k_lo, k_hi), tol)
    if sim.similar != "yes":
        raise SimilarityNotEstablished(
            f"similarity verdict over levels [{k_lo}, {k_hi}] was "
            f"'{sim.similar}', not 'yes'"
        )

    # Products are compared start level against start level; a stationary
    # comparator has one product for all of them.
    stationary_comp = comparator.kind == "stationary"
    comp_op = _product_op(comparator, comparator.k0, n, tol) if stationary_comp else None
    arity = 2 ** n
    diffs = []
    tnorms = []
    for k in range(k_lo, k_hi + 1):
        t_op = compose_all([target_q[k + n - 1 - j] for j in range(n)])
        c_op = comp_op if stationary_comp else _product_op(comparator, k, n, tol)
        diffs.append(residue_class_norm(t_op.mask - c_op.mask, arity))
        tnorms.append(residue_class_norm(t_op.mask, arity))

    k_tilde = None
    worst_from_here = 0.0
    suffix_max = [0.0] * len(diffs)
    for i in range(len(diffs) - 1, -1, -1):
        worst_from_here = max(worst_from_here, diffs[i])
        suffix_max[i] = worst_from_here
    for i, k in enumerate(range(k_lo, k_hi + 1)):
        if suffix_max[i] <= eps:
            k_tilde = k
            break
    if k_tilde is None:
        raise TailNotReached(
            f"product-norm differences never settled below epsilon = {eps!r} "
            f"within levels [{k_lo}, {k_hi}] (last suffix max {suffix_max[-1]!r})"
        )

    K = max(witness_star.K, k_tilde)
    checked = [t for k, t in zip(range(k_lo, k_hi + 1), tnorms) if k >= K]
    if checked and max(checked) > mu + 1e-12:
        raise RuntimeError(
            "transferred bound violated by a computed product norm; "
            "internal inconsistency"
        )
    witness = ContractionWitness(
        K=K, n=n, mu=mu, window=len(checked),
        windowed=not (stationary_target and stationary_comp),
    )
    meta = {
        "K_tilde": k_tilde,
        "epsilon": eps,
        "k_lo": k_lo,
        "k_hi": k_hi,
        "max_product_norm_checked": max(checked) if checked else None,
        "similar_analytic": sim.analytic,
    }
    return witness, meta


def transfer_condition_a(
    target: SchemeSpec,
    comparator: SchemeSpec,
    witness_star: ContractionWitness,
    k_range: tuple[int, int],
    tol: float = 1e-12,
    mu: float | None = None,
) -> ContractionWitness:
    """Carry a comparator's contraction over to an asymptotically similar
    scheme.

    Picks mu halfway between the comparator's mu* and 1 (overridable), sets
    epsilon to half the gap, and locates the first scanned level from which
    all n-fold product-norm differences stay below epsilon.  The returned
    start level is the larger of that level and the comparator's own.
    Raises SimilarityNotEstablished or TailNotReached when the window does
    not support the transfer; both are inconclusive outcomes.
    """
    witness, _ = _transfer(target, comparator, witness_star, k_range, tol, mu)
    return witness


def _prefix_norm(masks_desc: list[Mask], cap: int = _EXACT_PRODUCT_CAP) -> tuple[float, bool]:
    """Norm of the composed product (first list entry acts last).

    Exact when the product is short enough to expand; otherwise an upper
    bound from submultiplicativity over consecutive chunks.
    """
    if len(masks_desc) <= cap:
        return product_norm(masks_desc), True
    total = 1.0
    for i in range(0, len(masks_desc), cap):
        total *= product_norm(masks_desc[i : i + cap])
    return total, False


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Explicit constants proving geometric convergence of a refinement
    scheme, assembled from a contraction witness.

    mu_hat = mu**(1/n) is the certified per-level decay rate; C bounds the
    sup-distance to the limit by C * mu_hat**k * ||initial differences||.
    ``windowed`` marks certificates whose contraction rests on a finite
    scanned window rather than an exact stationary product.
    """

    mu_star: float
    n: int
    K: int
    mu: float
    mu_hat: float
    eta: float
    C1: float
    C2: float
    Gamma: float
    C: float
    holder_exponent: float
    provenance: str
    windowed: bool
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "mu_star": self.mu_star,
            "n": self.n,
            "K": self.K,
            "mu": self.mu,
            "mu_hat": self.mu_hat,
            "eta": self.eta,
            "C1": self.C1,
            "C2": self.C2,
            "Gamma": self.Gamma,
            "C": self.C,
            "holder_exponent": self.holder_exponent,
            "provenance": self.provenance,
            "windowed": self.windowed,
            "scan": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ConvergenceCertificate":
        return cls(
            mu_star=float(obj["mu_star"]), n=int(obj["n"]), K=int(obj["K"]),
            mu=float(obj["mu"]), mu_hat=float(obj["mu_hat"]),
            eta=float(obj["eta"]), C1=float(obj["C1"]), C2=float(obj["C2"]),
            Gamma=float(obj["Gamma"]), C=float(obj["C"]),
            holder_exponent=float(obj["holder_exponent"]),
            provenance=str(obj["provenance"]), windowed=bool(obj["windowed"]),
            meta=dict(obj.get("scan", {})),
        )


def certify_theorem4(
    target: SchemeSpec,
    comparator: SchemeSpec,
    eta: float | None = None,
    k_range: tuple[int, int] | None = None,
    tol: float = 1e-12,
    mu: float | None = None,
    n_max: int = 8,
) -> ConvergenceCertificate:
    """Certify convergence of ``target`` by comparison with a convergent
    stationary ``comparator``.

    Pipeline: find the comparator's exact contraction (mu*, n); check the
    target reproduces constants on the scanned levels and is asymptotically
    similar to the comparator; transfer the contraction (mu defaults to the
    midpoint of (mu*, 1)); then assemble the explicit constants

        C1    -- start-up factor covering levels before the contraction
                 kicks in,
        C2    -- N * (sup of coefficient sup-norms + 1), from the hat-
                 function telescoping,
        Gamma -- N * C1 * C2, the per-level gap constant,
        C     -- Gamma / (1 - mu_hat), the geometric-series total,

    plus the Holder exponent |log2 mu_hat| of the limit.

    ``eta`` is the rate quoted in the final bound.  When given without
    ``mu`` it sets mu = eta**n so the emitted (C, eta) pair is exactly the
    certified one; when both are given, eta must not undercut mu**(1/n).
    """
    if comparator.kind != "stationary":
        raise InvalidParameter("comparator must be a stationary scheme")
    witness_star = condition_a_search(comparator, n_max=n_max, tol=tol)
    mu_star, n = witness_star.mu, witness_star.n
    stationary_target = target.kind == "stationary"

    eta_floor = mu_star ** (1.0 / n)
    if eta is not None:
        lo_ok = eta >= eta_floor if stationary_target else eta > eta_floor
        if not (lo_ok and eta < 1.0):
            raise EtaOutOfRange(
                f"eta = {eta!r} outside the admissible range "
                f"({eta_floor!r}, 1)"
            )
        if mu is None:
            mu = eta ** n

    if k_range is None:
        k_range = (target.k0, target.k0 + 63)
    witness, transfer_meta = _transfer(
        target, comparator, witness_star, k_range, tol, mu
    )
    K, mu_used = witness.K, witness.mu
    mu_hat = mu_used ** (1.0 / n)
    if eta is None:
        eta = mu_hat
    elif eta < mu_hat - 1e-15:
        raise EtaOutOfRange(
            f"eta = {eta!r} undercuts the certified rate mu**(1/n) = {mu_hat!r}"
        )

    # Start-up constant: the worst prefix product of the target's
    # difference rules before level K + n - 1, inflated by mu_hat's
    # deficit over those levels.
    prefix: list[Mask] = []
    best = 1.0
    c1_exact = True
    for m_level in range(target.k0 + 1, K + n):
        prefix.insert(0, difference_mask(target.mask_at(m_level - 1), tol))
        norm_m, was_exact = _prefix_norm(prefix)
        c1_exact = c1_exact and was_exact
        best = max(best, norm_m)
    C1 = best / mu_hat ** (K + n - 1)

    bound = boundedness_estimate(target, (transfer_meta["k_lo"], transfer_meta["k_hi"]))
    C2 = target.N * (bound.coeff_sup + 1.0)
    Gamma = target.N * C1 * C2
    C = Gamma / (1.0 - mu_hat)
    holder = abs(math.log2(mu_hat))

    meta = dict(transfer_meta)
    meta.update(
        {
            "window": witness.window,
            "sup_from_hint": bound.from_hint,
            "c1_exact": c1_exact,
            "comparator_K": witness_star.K,
            "degenerate": bool(
                stationary_target
                and coeff_norm(
                    target.mask_at(target.k0) - comparator.mask_at(comparator.k0)
                )
                <= tol
            ),
        }
    )
    return ConvergenceCertificate(
        mu_star=mu_star, n=n, K=K, mu=mu_used, mu_hat=mu_hat, eta=eta,
        C1=C1, C2=C2, Gamma=Gamma, C=C, holder_exponent=holder,
        provenance="theorem2" if stationary_target else "theorem4",
        windowed=witness.windowed, meta=meta,
    )
