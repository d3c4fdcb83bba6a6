"""Command line entry point: ``hanoiflow {graph,flow,verify,expansion,treewidth}``.

Exit codes: 0 when every requested check passes, 1 on a failed check,
2 on invalid arguments or a budget refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

from . import acceptance
from .builder import PER_COMMODITY_BUDGET, audit_uniform_mcf, build_uniform_mcf
from .hanoi import DEFAULT_VERTEX_BUDGET, BudgetExceededError, HanoiGraph, boundary, facet
from .hanoi import sibling_pairs
from .msf import MsfProblem, render_number, validate_msf
from .oracles import (
    EXPANSION_BUDGET,
    TREEWIDTH_BUDGET,
    elimination_width,
    exact_edge_expansion,
    exact_treewidth,
    exact_vertex_expansion,
    witness_cut_bound,
)

SUMMARY_COLUMNS = ("p", "n", "rho", "lower_bound", "exact_h", "witness_bound", "theta_ratio")
LEDGER_COLUMNS = (
    "p", "n", "level", "shuffle", "transmission", "concentration_distribution", "rho", "increment",
)


class Refusal(Exception):
    pass


class ChecksFailed(Exception):
    pass


def _fmt(x) -> str:
    return "" if x is None else render_number(x)


def parse_n(text: str) -> list[int]:
    """``"4"`` or an inclusive range ``"1..5"``."""
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n expects an integer or a range a..b, got {text!r}")
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"--n needs 1 <= a <= b, got {text!r}")
    return list(range(lo, hi + 1))


def parse_p(text: str) -> int:
    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--p expects an integer, got {text!r}")
    if p < 3:
        raise argparse.ArgumentTypeError(f"p >= 3 required, got p={p}")
    return p


def _refuse_over(p: int, n: int, budget: int, what: str, hint: str = "") -> None:
    if p**n > budget:
        msg = f"refusing {what} on H_{p}^{n}: {p**n} vertices exceeds the budget of {budget}"
        raise Refusal(msg + (f"; {hint}" if hint else ""))


def _emit(args, records: list[dict], columns) -> None:
    if args.format == "json":
        text = json.dumps(records, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow({k: r.get(k, "") for k in columns})
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- graph -----------------------------------------------------------------------


def graph_report(p: int, n: int) -> dict:
    g = HanoiGraph(p, n)
    table = g.moves()
    degrees = Counter(int(d) for d in (table >= 0).sum(axis=(1, 2)))
    matchings = []
    for h_i, h_j in sibling_pairs(g.root()):
        matchings.append({"pegs": [h_i.label, h_j.label], "size": len(boundary(h_i, h_j)[2])})
    facets = {
        f"{i}-{j}": len(facet(g.root(), i, j))
        for i in range(1, p + 1)
        for j in range(i + 1, p + 1)
    }
    return {
        "p": p,
        "n": n,
        "vertices": g.vertex_count,
        "edges": len(g.edges()),
        "degree_histogram": {str(d): c for d, c in sorted(degrees.items())},
        "matchings": matchings,
        "facet_sizes": facets,
    }


def cmd_graph(args) -> int:
    budget = args.budget_vertices or DEFAULT_VERTEX_BUDGET
    records = []
    for n in args.n:
        _refuse_over(args.p, n, budget, "graph construction")
        records.append(graph_report(args.p, n))
    if args.format == "csv":
        for r in records:
            r["degree_histogram"] = " ".join(f"{d}:{c}" for d, c in r["degree_histogram"].items())
            r["matchings"] = " ".join(f"{a}-{b}:{m['size']}" for m in r["matchings"] for a, b in [m["pegs"]])
            r["facet_sizes"] = " ".join(f"{k}:{v}" for k, v in r["facet_sizes"].items())
    _emit(args, records, ("p", "n", "vertices", "edges", "degree_histogram", "matchings", "facet_sizes"))
    return 0


# -- flow ------------------------------------------------------------------------


def _validate(mcf) -> tuple[bool, str]:
    if mcf.per_source is not None:
        audit = audit_uniform_mcf(mcf)
        return audit.ok, f"{audit.checked} checks" + ("" if audit.ok else f": {audit.failures[:3]}")
    bad = validate_msf(mcf.aggregate, MsfProblem({}, {}))
    return not bad, "aggregate conservation" + ("" if not bad else f": {bad[:3]}")


def flow_record(p: int, n: int, mcf, exact_h=None) -> dict:
    ratio = Fraction(p, p - 2) if mcf.exact else p / (p - 2)
    return {
        "p": p,
        "n": n,
        "rho": _fmt(mcf.rho),
        "lower_bound": _fmt(mcf.lower_bound),
        "exact_h": _fmt(exact_h),
        "witness_bound": _fmt(witness_cut_bound(p, n)),
        "theta_ratio": _fmt(mcf.lower_bound * ratio**n),
    }


def cmd_flow(args) -> int:
    mode = "per-commodity" if args.per_commodity else "aggregate"
    budget = args.budget_vertices or (PER_COMMODITY_BUDGET if args.per_commodity else DEFAULT_VERTEX_BUDGET)
    summary, ledger_rows, ok = [], [], True
    for n in args.n:
        _refuse_over(args.p, n, budget, f"{mode} flow", "drop --per-commodity for aggregate mode")
        mcf = build_uniform_mcf(args.p, n, mode=mode, exact=args.exact, vertex_budget=budget)
        exact_h = None
        if args.p**n <= EXPANSION_BUDGET:
            exact_h = exact_edge_expansion(HanoiGraph(args.p, n), workers=args.workers)[0]
        record = flow_record(args.p, n, mcf, exact_h)
        if args.exact or args.per_commodity:
            passed, detail = _validate(mcf)
            ok &= passed
            record["validation"] = {"passed": passed, "detail": detail}
            _log(f"[{'PASS' if passed else 'FAIL'}] H_{args.p}^{n} flow validation: {detail}")
        levels = mcf.ledger.as_records()
        for lv in levels:
            ledger_rows.append({"p": args.p, "n": n, **lv})
        record["levels"] = levels
        record["constant"] = _fmt(mcf.ledger.constant)
        summary.append(record)
    if args.format == "json":
        _emit(args, summary, SUMMARY_COLUMNS)
    elif args.table == "ledger":
        # one ledger per n repeats the lower levels; keep the deepest
        deepest = max(args.n)
        _emit(args, [r for r in ledger_rows if r["n"] == deepest], LEDGER_COLUMNS)
    else:
        _emit(args, summary, SUMMARY_COLUMNS)
    if not ok:
        raise ChecksFailed("flow validation failed")
    return 0


# -- expansion / treewidth -------------------------------------------------------


def cmd_expansion(args) -> int:
    budget = args.budget_vertices or EXPANSION_BUDGET
    records = []
    for n in args.n:
        _refuse_over(
            args.p, n, budget, "exact expansion",
            f"use `hanoiflow flow --p {args.p} --n {n}` for bounds only",
        )
        g = HanoiGraph(args.p, n)
        bound = witness_cut_bound(args.p, n)
        h, w = exact_edge_expansion(g, budget=budget, upper_bound=bound, workers=args.workers)
        h_v, w_v = exact_vertex_expansion(g, budget=budget, workers=args.workers)
        records.append({
            "p": args.p,
            "n": n,
            "h": _fmt(h),
            "h_witness": " ".join(map(str, w.vertices)),
            "h_boundary": w.boundary,
            "h_v": _fmt(h_v),
            "h_v_witness": " ".join(map(str, w_v.vertices)),
            "h_v_boundary": w_v.boundary,
            "witness_bound": _fmt(bound),
        })
    _emit(args, records, tuple(records[0]))
    return 0


def cmd_treewidth(args) -> int:
    budget = args.budget_vertices or TREEWIDTH_BUDGET
    records = []
    for n in args.n:
        _refuse_over(args.p, n, budget, "exact treewidth")
        g = HanoiGraph(args.p, n)
        cert = exact_treewidth(g, budget=budget)
        replayed = elimination_width(g, cert.order)
        if replayed != cert.width:
            raise ChecksFailed(f"certificate replays to width {replayed}, not {cert.width}")
        records.append({
            "p": args.p,
            "n": n,
            "treewidth": cert.width,
            "order": " ".join(map(str, cert.order)),
        })
    _emit(args, records, ("p", "n", "treewidth", "order"))
    return 0


# -- verify ----------------------------------------------------------------------


def _instance_checks(p: int, n: int, workers: int) -> list[acceptance.CriterionResult]:
    def structure():
        bad = acceptance.structure_failures(p, n) if n >= 2 else []
        return not bad, "; ".join(bad[:3]) or "matchings, facets, boundaries", {}

    def flow():
        mode = "per-commodity" if p**n <= PER_COMMODITY_BUDGET else "aggregate"
        passed, detail = _validate(build_uniform_mcf(p, n, mode=mode, exact=True))
        return passed, f"{mode}: {detail}", {}

    def bounds():
        row = acceptance.sandwich(p, n, workers=workers)
        passed = row["lower_bound"] <= row["exact_h"] <= row["witness_bound"]
        return passed, f"{row['lower_bound']} <= {row['exact_h']} <= {row['witness_bound']}", {}

    def chain():
        if p**n > TREEWIDTH_BUDGET:
            return True, "skipped: treewidth budget", {}
        v = acceptance.relation_values(HanoiGraph(p, n))
        bad = acceptance.check_relations(v["h"], v["h_v"], v["max_degree"], v["t"], v["vertex_count"])
        return not bad, "; ".join(bad) or f"h_v={v['h_v']} h={v['h']} t={v['t']}", {}

    return [
        acceptance.run_check(k, name, fn)
        for k, (name, fn) in enumerate(
            [("structure", structure), ("flow validity", flow), ("expansion sandwich", bounds),
             ("inequality chain", chain)],
            start=1,
        )
    ]


def cmd_verify(args) -> int:
    if args.p is not None:
        budget = args.budget_vertices or EXPANSION_BUDGET
        results = []
        for n in args.n or [1]:
            _refuse_over(
                args.p, n, budget, "exact oracles",
                f"bounds-only mode: `hanoiflow flow --p {args.p} --n {n}`",
            )
            results.extend(_instance_checks(args.p, n, args.workers))
    elif args.full:
        results = [c() for c in acceptance.ALL_CRITERIA[:6]]
        results.append(acceptance.criterion_oracle_soundness(seed=args.seed))
        results.append(acceptance.criterion_framework_failure())
    else:
        results = [acceptance.criterion_structure(), acceptance.criterion_framework_failure()]
        codec = acceptance.codec_failures() + [
            f for p in (3, 4, 5) for n in range(1, 7) for f in acceptance.degree_failures(p, n)
        ]
        results.append(acceptance.CriterionResult(0, "codec, edge counts, degrees", not codec, "; ".join(codec[:3])))
    if args.format == "json":
        records = [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ]
        _emit(args, records, ())
    else:
        text = "\n".join(r.line().replace(f"({r.seconds:.2f}s) ", "") for r in results) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    if not all(r.passed for r in results):
        raise ChecksFailed("some checks failed")
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hanoiflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(name, help_text, need_pn=True):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--p", type=parse_p, required=need_pn, help="number of pegs (>= 3)")
        sp.add_argument("--n", type=parse_n, required=need_pn, help="discs: N or range A..B")
        sp.add_argument("--budget-vertices", type=int, default=None, help="vertex budget override")
        sp.add_argument("--workers", type=int, default=1, help="processes for exact search")
        sp.add_argument("--seed", type=int, default=0, help="seed for random test graphs")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        return sp

    common("graph", "structural report").set_defaults(func=cmd_graph)
    sp = common("flow", "uniform flow, congestion ledger and bounds")
    sp.add_argument("--exact", action="store_true", help="rational arithmetic plus validation")
    sp.add_argument("--per-commodity", action="store_true", help="keep and audit per-source flows")
    sp.add_argument("--table", choices=("summary", "ledger"), default="summary")
    sp.set_defaults(func=cmd_flow)
    common("expansion", "exact edge and vertex expansion").set_defaults(func=cmd_expansion)
    common("treewidth", "exact treewidth with elimination order").set_defaults(func=cmd_treewidth)
    sp = common("verify", "run the acceptance checks", need_pn=False)
    level = sp.add_mutually_exclusive_group()
    level.add_argument("--quick", action="store_true", help="structure and codec invariants (default)")
    level.add_argument("--full", action="store_true", help="every acceptance criterion")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "verify" and (args.p is None) != (args.n is None):
        parser.error("verify needs both --p and --n, or neither")
    try:
        return args.func(args)
    except (Refusal, BudgetExceededError) as exc:
        _log(f"hanoiflow: {exc}")
        return 2
    except ChecksFailed as exc:
        _log(f"hanoiflow: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
