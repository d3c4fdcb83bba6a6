"""End-to-end checks shared by the test suite and ``hanoiflow verify``.

Each ``criterion_*`` function runs one exit criterion and returns a
:class:`CriterionResult`; nothing here raises on failure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import hanoi
from .builder import audit_uniform_mcf, build_uniform_mcf
from .hanoi import HanoiGraph, boundary, facet, partition_by_largest
from .msf import expansion_lower_bound
from .oracles import (
    brute_force_expansion,
    check_relations,
    connected_only_expansion,
    exact_edge_expansion,
    exact_treewidth,
    exact_vertex_expansion,
    witness_cut_bound,
)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.name} ({self.seconds:.2f}s) {self.detail}"


def run_check(number: int, name: str, fn) -> CriterionResult:
    start = time.perf_counter()
    try:
        passed, detail, data = fn()
    except Exception as exc:  # reported, not raised
        passed, detail, data = False, f"error: {exc!r}", {}
    return CriterionResult(number, name, passed, detail, time.perf_counter() - start, data)


# -- 1 -----------------------------------------------------------------------------


def structure_failures(p: int, n: int) -> list[str]:
    """Matching, facet and boundary identities for the top level of H_p^n."""
    failures = []
    root = HanoiGraph(p, n).root()
    children = partition_by_largest(root)
    expected = (p - 2) ** (n - 1)
    for h_i, h_j in hanoi.sibling_pairs(root):
        i, j = h_i.label, h_j.label
        b_i, b_j, edges = boundary(h_i, h_j)
        tails = [u for u, _ in edges]
        heads = [v for _, v in edges]
        if len(set(tails)) != len(tails) or len(set(heads)) != len(heads):
            failures.append(f"H_{p}^{n} ({i},{j}): boundary edges are not a matching")
        if len(edges) != expected:
            failures.append(f"H_{p}^{n} ({i},{j}): {len(edges)} edges, expected {expected}")
        if b_i != facet(h_i, i, j).as_set() or b_j != facet(h_j, i, j).as_set():
            failures.append(f"H_{p}^{n} ({i},{j}): boundary differs from facet")
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            whole = facet(root, i, j)
            if len(whole) != (p - 2) ** n:
                failures.append(f"|F_{i}{j}(H_{p}^{n})| = {len(whole)}")
            parts = [facet(c, i, j).as_set() for c in children if c.label not in (i, j)]
            sizes = {len(s) for s in parts}
            union = set().union(*parts)
            if sizes != {len(whole) // (p - 2)} or union != whole.as_set():
                failures.append(f"F_{i}{j}(H_{p}^{n}) does not split into p-2 equal facets")
            for c in children:
                if c.label in (i, j) and whole.as_set() & set(c.vertices()):
                    failures.append(f"F_{i}{j}(H_{p}^{n}) meets child {c.label}")
    return failures


def criterion_structure(ps=(3, 4, 5), ns=range(2, 7)) -> CriterionResult:
    def run():
        failures = [f for p in ps for n in ns for f in structure_failures(p, n)]
        return not failures, "; ".join(failures[:3]) or f"p in {tuple(ps)}, n in {tuple(ns)}", {}

    res = run_check(1, "structure: matchings, facets, boundaries", run)
    if res.passed and res.seconds >= 10:
        res.passed, res.detail = False, f"runtime {res.seconds:.1f}s exceeds 10s"
    return res


# -- 2 -----------------------------------------------------------------------------


def criterion_flow_validity(instances=((3, 2), (3, 3), (4, 2))) -> CriterionResult:
    timings = {}

    def run():
        failures = []
        for p, n in instances:
            t0 = time.perf_counter()
            mcf = build_uniform_mcf(p, n, mode="per-commodity", exact=True)
            audit = audit_uniform_mcf(mcf)
            timings[(p, n)] = time.perf_counter() - t0
            if not audit.ok:
                failures.append(f"H_{p}^{n}: {audit.failures[:2]}")
        slow = timings.get((3, 3), 0) >= 60
        if slow:
            failures.append(f"H_3^3 took {timings[(3, 3)]:.1f}s")
        detail = ", ".join(f"H_{p}^{n} {t:.2f}s" for (p, n), t in timings.items())
        return not failures, "; ".join(failures) or detail, {"timings": timings}

    return run_check(2, "flow validity (exact, per-commodity)", run)


# -- 3 -----------------------------------------------------------------------------


def fitted_constant(p: int, n_max: int = 5, exact: bool = True):
    ledger = build_uniform_mcf(p, n_max, exact=exact).ledger
    terms = [t for t in ledger.levels if t.level >= 2]
    ratio = Fraction(p, p - 2)
    c = max(Fraction(t.increment) / ratio**t.level for t in terms)
    holds = all(t.increment <= c * ratio**t.level for t in terms)
    return c, holds, ledger


def criterion_recurrence(ps=(3, 4), n_max: int = 5) -> CriterionResult:
    def run():
        failures, data = [], {}
        for p in ps:
            c1, holds, ledger = fitted_constant(p, n_max)
            c2, _, _ = fitted_constant(p, n_max)
            data[p] = c1
            if not holds:
                failures.append(f"p={p}: increments exceed C (p/(p-2))^n")
            if c1 != c2:
                failures.append(f"p={p}: C not reproducible ({c1} vs {c2})")
            if c1 > ledger.analytic_constant:
                failures.append(f"p={p}: C={c1} above per-arc bound {ledger.analytic_constant}")
        detail = ", ".join(f"C(p={p})={c}" for p, c in data.items())
        return not failures, "; ".join(failures) or detail, {"constants": data}

    return run_check(3, "congestion recurrence", run)


# -- 4 -----------------------------------------------------------------------------


SANDWICH_INSTANCES = ((3, 1), (3, 2), (3, 3), (4, 1), (4, 2))


def sandwich(p: int, n: int, workers: int = 1) -> dict:
    mcf = build_uniform_mcf(p, n, exact=True)
    h, witness = exact_edge_expansion(HanoiGraph(p, n), workers=workers)
    return {
        "p": p,
        "n": n,
        "rho": mcf.rho,
        "lower_bound": expansion_lower_bound(mcf.rho),
        "exact_h": h,
        "witness_bound": witness_cut_bound(p, n),
        "witness": witness,
    }


def criterion_sandwich(instances=SANDWICH_INSTANCES) -> CriterionResult:
    def run():
        failures, rows = [], []
        for p, n in instances:
            t0 = time.perf_counter()
            row = sandwich(p, n)
            elapsed = time.perf_counter() - t0
            rows.append(row)
            if not row["lower_bound"] <= row["exact_h"] <= row["witness_bound"]:
                failures.append(
                    f"H_{p}^{n}: {row['lower_bound']} <= {row['exact_h']} "
                    f"<= {row['witness_bound']} fails"
                )
            if (p, n) == (3, 3) and elapsed >= 300:
                failures.append(f"H_3^3 expansion took {elapsed:.0f}s")
        detail = ", ".join(
            f"H_{r['p']}^{r['n']}: {r['lower_bound']} <= {r['exact_h']} <= {r['witness_bound']}"
            for r in rows
        )
        return not failures, "; ".join(failures) or detail, {"rows": rows}

    return run_check(4, "expansion sandwich", run)


# -- 5 -----------------------------------------------------------------------------


def criterion_trend(n_exact=(1, 2, 3), n_flow=range(1, 6), ps=(3, 4)) -> CriterionResult:
    def run():
        exact_scaled = [exact_edge_expansion(HanoiGraph(3, n))[0] * 3**n for n in n_exact]
        flow_scaled = {}
        for p in ps:
            ledger = build_uniform_mcf(p, max(n_flow), exact=True).ledger
            ratio = Fraction(p, p - 2)
            flow_scaled[p] = [
                expansion_lower_bound(t.rho) * ratio**t.level
                for t in ledger.levels
                if t.level in n_flow
            ]
        exact_band = (min(exact_scaled), max(exact_scaled))
        flow_bands = {p: (min(v), max(v)) for p, v in flow_scaled.items()}
        passed = exact_band[0] > 0 and all(lo > 0 for lo, _ in flow_bands.values())
        detail = f"h(H_3^n) 3^n in [{exact_band[0]}, {exact_band[1]}]; " + ", ".join(
            f"p={p}: lb (p/(p-2))^n in [{lo}, {hi}]" for p, (lo, hi) in flow_bands.items()
        )
        return passed, detail, {"exact_band": exact_band, "flow_bands": flow_bands}

    return run_check(5, "asymptotic trend bands", run)


# -- 6 -----------------------------------------------------------------------------


def relation_values(g) -> dict:
    from .oracles import as_adjacency

    adj = as_adjacency(g)
    h, _ = exact_edge_expansion(adj)
    h_v, _ = exact_vertex_expansion(adj)
    t = exact_treewidth(adj).width
    delta = max(len(row) for row in adj)
    return {"h": h, "h_v": h_v, "t": t, "max_degree": delta, "vertex_count": len(adj)}


def criterion_relations() -> CriterionResult:
    graphs = {
        "K_3": HanoiGraph(3, 1),
        "K_4": HanoiGraph(4, 1),
        "H_3^2": HanoiGraph(3, 2),
        "H_4^2": HanoiGraph(4, 2),
    }

    def run():
        failures, values = [], {}
        for name, g in graphs.items():
            v = relation_values(g)
            values[name] = v
            bad = check_relations(v["h"], v["h_v"], v["max_degree"], v["t"], v["vertex_count"])
            failures.extend(f"{name}: {b}" for b in bad)
        detail = ", ".join(f"{k}: h_v={v['h_v']} h={v['h']} t={v['t']}" for k, v in values.items())
        return not failures, "; ".join(failures) or detail, {"values": values}

    return run_check(6, "inequality chain", run)


# -- 7 -----------------------------------------------------------------------------


def random_connected_graph(vertex_count: int, rng: np.random.Generator, extra: float = 0.3):
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    adj = [set() for _ in range(vertex_count)]
    for v in range(1, vertex_count):
        u = int(rng.integers(v))
        adj[u].add(v)
        adj[v].add(u)
    for u in range(vertex_count):
        for v in range(u + 1, vertex_count):
            if v not in adj[u] and rng.random() < extra:
                adj[u].add(v)
                adj[v].add(u)
    return [sorted(row) for row in adj]


def random_tree(vertex_count: int, rng: np.random.Generator):
    return random_connected_graph(vertex_count, rng, extra=0.0)


def complete_graph(k: int):
    return [[v for v in range(k) if v != u] for u in range(k)]


def criterion_oracle_soundness(seed: int = 0, graphs: int = 10, max_vertices: int = 12):
    def run():
        rng = np.random.default_rng(seed)
        failures = []
        for k in range(graphs):
            V = int(rng.integers(4, max_vertices + 1))
            adj = random_connected_graph(V, rng, extra=float(rng.uniform(0.1, 0.5)))
            for kind, oracle in (("edge", exact_edge_expansion), ("vertex", exact_vertex_expansion)):
                restricted = oracle(adj)[0]
                full = brute_force_expansion(adj, kind)[0]
                if restricted != full:
                    failures.append(f"graph {k} ({kind}): {restricted} != {full}")
            if connected_only_expansion(adj, "edge") != brute_force_expansion(adj, "edge")[0]:
                failures.append(f"graph {k}: unpruned connected edge search differs")
        for k in range(2, 9):
            if exact_treewidth(complete_graph(k)).width != k - 1:
                failures.append(f"tw(K_{k}) != {k - 1}")
        for k in range(graphs):
            V = int(rng.integers(2, max_vertices + 1))
            if exact_treewidth(random_tree(V, rng)).width != 1:
                failures.append(f"random tree {k}: treewidth != 1")
        detail = f"seed={seed}, {graphs} graphs, K_2..K_8, {graphs} trees"
        return not failures, "; ".join(failures) or detail, {}

    return run_check(7, "oracle soundness", run)


# -- 8 -----------------------------------------------------------------------------


def framework_condition(p: int, n: int) -> tuple[int, Fraction]:
    """Matching size between two children and the size the old framework demands."""
    child = p ** (n - 1)
    return (p - 2) ** (n - 1), Fraction(child * child, p**n)


def criterion_framework_failure(p: int = 3, ns=range(3, 9), measure_up_to: int = 6):
    def run():
        failures = []
        for n in ns:
            have, need = framework_condition(p, n)
            if n <= measure_up_to:
                h = partition_by_largest(HanoiGraph(p, n).root())
                have_measured = len(boundary(h[0], h[1])[2])
                if have_measured != have:
                    failures.append(f"n={n}: measured matching {have_measured} != {have}")
            if not have < need:
                failures.append(f"n={n}: {have} >= {need}")
        detail = ", ".join(
            f"n={n}: {framework_condition(p, n)[0]} < {framework_condition(p, n)[1]}" for n in ns
        )
        return not failures, "; ".join(failures) or detail, {}

    return run_check(8, "framework condition fails", run)


def codec_failures(ps=(3, 4, 5), ns=range(1, 7)) -> list[str]:
    failures = []
    for p in ps:
        for n in ns:
            for k in range(p**n):
                if hanoi.config_to_index(hanoi.index_to_config(k, p, n), p) != k:
                    failures.append(f"codec round trip fails at p={p}, n={n}, k={k}")
                    break
            if hanoi.edge_count(HanoiGraph(p, n)) != len(HanoiGraph(p, n).edges()):
                failures.append(f"edge count mismatch at p={p}, n={n}")
    return failures


def degree_failures(p: int, n: int) -> list[str]:
    g = HanoiGraph(p, n)
    deg = (g.moves() >= 0).sum(axis=(1, 2))
    out = []
    for k in range(g.vertex_count):
        c = g.config(k)
        if deg[k] != comb(p, 2) - comb(hanoi.empty_pegs(c, p), 2):
            out.append(f"degree formula fails at {c}")
            break
    return out


ALL_CRITERIA = (
    criterion_structure,
    criterion_flow_validity,
    criterion_recurrence,
    criterion_sandwich,
    criterion_trend,
    criterion_relations,
    criterion_oracle_soundness,
    criterion_framework_failure,
)
