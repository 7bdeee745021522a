"""Command-line surface: analysis, comparison, certification, refinement,
and reproduction of the corner-cutting experiments.

Exit codes are a stable contract: 0 success/certified, 2 load or parse
failure, 3 precondition failure, 4 inconclusive.  Inconclusive is never
conflated with "not convergent": the windowed tests are one-sided.
Identical invocations produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import catalog, refine
from .errors import (
    ContractionNotFound,
    EmptyOutput,
    InvalidParameter,
    NotConstantReproducing,
    SubdivError,
    TailNotReached,
)
from .masks import difference_mask, parity_sums, reproduces_constants, sup_norm
from .operators import condition_a_search, contraction_scan
from .schemes import (
    ConvergenceCertificate,
    boundedness_estimate,
    certify_theorem4,
    similarity_report,
)

EXIT_OK = 0
EXIT_LOAD = 2
EXIT_PRECONDITION = 3
EXIT_INCONCLUSIVE = 4

FIGURE1_ALPHAS = (2.5, 1.5, 0.5, -0.5, -1.5)
FIGURE2_ITERATIONS = (8, 12, 16)


def _num_threads() -> int:
    """Requested parallelism cap; evaluation is sequential, which honors
    any cap and keeps outputs deterministic."""
    raw = os.environ.get("SUBDIV_NUM_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidParameter(f"SUBDIV_NUM_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise InvalidParameter("SUBDIV_NUM_THREADS must be at least 1")
    return cap


def _parse_k_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise InvalidParameter(f"--k-range must look like A:B, got {text!r}")
    return int(lo), int(hi)


def _emit_json(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])


def _failure(kind: str, exc: Exception, out: str | None) -> None:
    reason = {"type": type(exc).__name__, "message": str(exc)}
    level = getattr(exc, "level", None)
    if level is not None:
        reason["level"] = level
    _emit_json({kind: False, "reason": reason}, out)
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)


def _map_failure(kind: str, exc: Exception, out: str | None) -> int:
    _failure(kind, exc, out)
    if isinstance(exc, (TailNotReached, ContractionNotFound)):
        return EXIT_INCONCLUSIVE
    return EXIT_PRECONDITION


def _load_scheme(text: str):
    try:
        return catalog.parse_scheme_arg(text)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, SubdivError) as exc:
        print(f"error loading scheme {text!r}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_LOAD)


def cmd_analyze(args) -> int:
    _num_threads()
    scheme = _load_scheme(args.scheme)
    k_lo, k_hi = args.k_range or (scheme.k0, scheme.k0 + 16)
    if scheme.max_level is not None:
        k_hi = min(k_hi, scheme.max_level)
    levels = range(k_lo, k_hi + 1) if scheme.kind != "stationary" else [scheme.k0]

    try:
        described = scheme.to_dict()
    except SubdivError:
        described = {"name": scheme.name}
    report: dict = {"scheme": described, "levels": {}}
    all_ok = True
    for k in levels:
        m = scheme.mask_at(k)
        ok = reproduces_constants(m, args.tol)
        entry = {
            "reproduces_constants": ok,
            "parity_sums": list(parity_sums(m)),
            "operator_norm": sup_norm(m),
        }
        verdict = "ok" if ok else "FAILS"
        line = f"level {k}: constants {verdict}; ||S_a|| = {sup_norm(m)!r}"
        if ok:
            q = difference_mask(m, args.tol)
            entry["difference_mask"] = q.to_dict()
            entry["difference_norm"] = sup_norm(q)
            if args.verbose or k - k_lo < 3:
                line += f"; q = {list(q.coeffs)} at base {q.base}, ||S_q|| = {sup_norm(q)!r}"
        report["levels"][str(k)] = entry
        all_ok = all_ok and ok
        print(line)

    bound = boundedness_estimate(scheme, (k_lo, k_hi))
    report["boundedness"] = bound.to_dict()
    if not all_ok:
        exc = NotConstantReproducing(
            "constant reproduction fails on scanned levels; no difference "
            "scheme exists"
        )
        report["contraction"] = None
        report["ok"] = False
        report["reason"] = {"type": type(exc).__name__, "message": str(exc)}
        _emit_json(report, args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    try:
        witness = condition_a_search(
            scheme, n_max=args.n_max, K_max=args.K_max, window=args.window,
            tol=args.tol,
        )
    except ContractionNotFound as exc:
        report["contraction"] = None
        report["scan"] = [list(c) for c in exc.scan]
        _emit_json(report, args.out)
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    report["contraction"] = witness.to_dict()
    if args.verbose:
        report["scan"] = [
            list(c)
            for c in contraction_scan(
                scheme, n_max=args.n_max, K_max=args.K_max, window=args.window,
                tol=args.tol,
            )
        ]
    print(
        f"contraction: K={witness.K} n={witness.n} mu={witness.mu!r} "
        f"(window={witness.window}, windowed={witness.windowed})"
    )
    print("note: products apply the lowest level first (rightmost factor).")
    if args.out or args.format == "json":
        _emit_json(report, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    _num_threads()
    a = _load_scheme(args.scheme)
    b = _load_scheme(args.comparator)
    k_lo, k_hi = args.k_range or (max(a.k0, b.k0), max(a.k0, b.k0) + 63)
    try:
        report = similarity_report(a, b, (k_lo, k_hi), tol=args.tol)
    except SubdivError as exc:
        return _map_failure("ok", exc, args.out and args.out + ".json")
    print(f"similar: {report.similar}; equivalent: {report.equivalent}"
          + (" (analytic)" if report.analytic else ""))
    if report.decay_fit:
        rate, exponent = report.decay_fit
        print(f"decay fit: diff ~ {rate!r} * k^{exponent!r}")
    if args.out:
        _emit_json(report.to_dict(), args.out + ".json")
        _write_csv(
            args.out + ".csv",
            ["k", "diff", "partial_sum"],
            zip(report.ks, report.diffs, report.partial_sums),
        )
    return EXIT_OK


def cmd_certify(args) -> int:
    _num_threads()
    target = _load_scheme(args.scheme)
    comparator = _load_scheme(args.comparator)
    k_range = args.k_range or (target.k0, target.k0 + args.window - 1)
    try:
        cert = certify_theorem4(
            target, comparator, eta=args.eta, k_range=k_range, tol=args.tol,
            mu=args.mu, n_max=args.n_max,
        )
    except (ContractionNotFound, TailNotReached, SubdivError) as exc:
        return _map_failure("certified", exc, args.out)
    payload = {"certified": True, "certificate": cert.to_dict(),
               "target": target.to_dict(), "comparator": comparator.to_dict()}
    _emit_json(payload, args.out)
    label = cert.provenance + ("-degenerate" if cert.meta.get("degenerate") else "")
    print(
        f"certified ({label}): mu*={cert.mu_star!r} n={cert.n} "
        f"K={cert.K} mu_hat={cert.mu_hat!r} C={cert.C!r} "
        f"holder={cert.holder_exponent!r}"
    )
    return EXIT_OK


def _initial_state(args, scheme) -> refine.RefinementState:
    if args.initial == "delta":
        return refine.impulse(args.halfwidth, level=scheme.k0)
    if args.initial == "ones":
        return refine.constant(1.0, args.halfwidth, level=scheme.k0)
    with open(args.initial, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    window = refine.Window(int(obj["start"]), [float(v) for v in obj["values"]])
    return refine.make_state(window, level=int(obj.get("level", scheme.k0)))


def cmd_refine(args) -> int:
    _num_threads()
    scheme = _load_scheme(args.scheme)
    cert = None
    if args.certificate:
        try:
            with open(args.certificate, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
            cert = ConvergenceCertificate.from_dict(obj.get("certificate", obj))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            print(f"error loading certificate: {exc}", file=sys.stderr)
            return EXIT_LOAD
    try:
        state = _initial_state(args, scheme)
        report = refine.decay_report(scheme, state, args.levels, certificate=cert)
    except EmptyOutput as exc:
        _failure("ok", exc, None)
        print("hint: enlarge --halfwidth so the valid interval survives "
              f"{args.levels} levels", file=sys.stderr)
        return EXIT_PRECONDITION
    except SubdivError as exc:
        return _map_failure("ok", exc, None)
    print(f"rho_emp = {report.rho_emp!r}"
          + (" (non-contractive)" if report.non_contractive else ""))
    if report.bounds_hold is not None:
        print(f"certified bounds hold: {report.bounds_hold}")
    if args.out:
        _write_csv(args.out, ["k", "delta_norm", "cauchy_norm", "bound"],
                   report.rows())
    return EXIT_OK


def cmd_figure(args) -> int:
    _num_threads()
    if args.which == 1:
        gamma = args.gamma
        peaks = []
        for alpha in FIGURE1_ALPHAS:
            scheme = catalog.derham_nonstationary(gamma, alpha=alpha)
            state = refine.impulse(args.halfwidth, level=scheme.k0)
            try:
                sample = refine.limit_sample(scheme, state, args.levels)
            except EmptyOutput as exc:
                _failure("ok", exc, None)
                print("hint: enlarge --halfwidth", file=sys.stderr)
                return EXIT_PRECONDITION
            peaks.append((alpha, sample.peak))
            if args.out:
                path = f"{args.out}_alpha_{alpha:+.1f}.csv"
                _write_csv(path, ["x", "value"],
                           zip(sample.xs.tolist(), sample.values.tolist()))
        for alpha, peak in peaks:
            print(f"alpha = {alpha:+.1f}: peak = {peak!r}")
        return EXIT_OK

    scheme = catalog.perturbed_chaikin()
    state = refine.impulse(args.halfwidth, level=scheme.k0)
    traces = {}
    gaps = []
    s = state
    try:
        for step in range(1, max(FIGURE2_ITERATIONS) + 1):
            nxt = refine.refine_once(s, scheme)
            gaps.append(refine._pl_gap(s.window, nxt.window))
            s = nxt
            if step in FIGURE2_ITERATIONS:
                traces[step] = s
    except EmptyOutput as exc:
        _failure("ok", exc, None)
        print("hint: enlarge --halfwidth", file=sys.stderr)
        return EXIT_PRECONDITION
    if args.out:
        rows = []
        for step in FIGURE2_ITERATIONS:
            st = traces[step]
            rows.extend(
                (st.level, x, v)
                for x, v in zip(st.xs().tolist(), st.window.values.tolist())
            )
        _write_csv(args.out, ["k", "x", "value"], rows)
    print(f"interpolant gaps per step: first {gaps[0]!r}, last {gaps[-1]!r}")
    if gaps[-1] >= gaps[0]:
        print("gaps do not decay: no Cauchy behaviour in this window")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, comparator: bool = False) -> None:
    p.add_argument("--scheme", required=True,
                   help="catalog name (optionally name:key=val,...) or JSON path")
    if comparator:
        p.add_argument("--comparator", required=True,
                       help="comparator scheme, same syntax as --scheme")
    p.add_argument("--k-range", type=_parse_k_range, default=None,
                   metavar="A:B", dest="k_range",
                   help="inclusive level range to scan")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=None, help="output file (or file prefix)")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subdiv",
        description="Analyze, certify, and run binary subdivision schemes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="constants, difference rules, contraction search")
    _add_common(p)
    p.add_argument("--n-max", type=int, default=8, dest="n_max")
    p.add_argument("--K-max", type=int, default=32, dest="K_max")
    p.add_argument("--window", type=int, default=64)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="asymptotic similarity / equivalence report")
    _add_common(p, comparator=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("certify", help="convergence certificate against a stationary comparator")
    _add_common(p, comparator=True)
    p.add_argument("--n-max", type=int, default=8, dest="n_max")
    p.add_argument("--window", type=int, default=64)
    p.add_argument("--eta", type=float, default=None,
                   help="decay rate quoted in the bound (sets mu = eta**n)")
    p.add_argument("--mu", type=float, default=None,
                   help="override the transferred contraction bound")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("refine", help="decay report for a scheme run")
    _add_common(p)
    p.add_argument("--levels", type=int, default=12,
                   help="last level tabulated")
    p.add_argument("--initial", default="delta",
                   help="'delta', 'ones', or a JSON window file")
    p.add_argument("--halfwidth", type=int, default=8)
    p.add_argument("--certificate", default=None,
                   help="certificate JSON to check bounds against")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("figure", help="reproduce the corner-cutting experiments")
    p.add_argument("which", type=int, choices=(1, 2))
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=12)
    p.add_argument("--halfwidth", type=int, default=8)
    p.add_argument("--out", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_figure)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_LOAD
    except InvalidParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
