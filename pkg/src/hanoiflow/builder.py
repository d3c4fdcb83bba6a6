"""Recursive uniform multicommodity flow on H_p^n.

Pairs of vertices inside one child copy of H_p^(n-1) reuse the flow built
one level down. A source ``s`` in child ``a`` reaches every vertex of child
``b`` through four stages:

shuffle
    ``s`` spreads one unit to every vertex of its own child (the recursive
    flow again, so summed over all sources it is one more copy of it);
concentration
    every vertex of child ``a`` pushes its unit onto the boundary facet
    F_ab of child ``a``;
transmission
    each boundary vertex sends its load across its matching edge;
distribution
    the boundary facet F_ab of child ``b`` spreads the load so that every
    vertex of ``b`` ends up with one unit.

Distribution is solved recursively over the grandchildren: the p-2
grandchildren touching the facet keep a (p-2)/p share, route a 1/p share each
to the two facet-free grandchildren, which then distribute what they receive.
Concentration is the arc reversal of distribution.

All stage flows are kept as *unit* flows (surplus 1 per facet vertex) on a
standalone H_p^m, memoized per (m, pegs), and embedded by block offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .hanoi import (
    BudgetExceededError,
    Facet,
    HanoiGraph,
    StructuralError,
    SubgraphHandle,
    facet,
    facet_local,
    partition_by_largest,
)
from .msf import (
    ArcFlow,
    CongestionReport,
    MsfProblem,
    Number,
    Violation,
    _heads,
    compose,
    congestion,
    expansion_lower_bound,
    render_number,
    validate_msf,
)

PER_COMMODITY_BUDGET = 100


def _q(num: int, den: int, exact: bool) -> Number:
    return Fraction(num, den) if exact else num / den


def _zeros(p: int, m: int, exact: bool) -> np.ndarray:
    return np.zeros((p**m, p, p), dtype=object if exact else np.float64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _pair(x: int, y: int) -> tuple[int, int]:
    return (x, y) if x < y else (y, x)


def _add_transmission(F: np.ndarray, p: int, m: int, c: int, d: int, amount) -> None:
    """Add ``amount`` on every matching arc from child ``c`` to child ``d`` of H_p^m."""
    blk = p ** (m - 1)
    tails = c * blk + facet_local(p, m - 1, c, d)
    F[tails, c, d] += amount


def _reverse(values: np.ndarray, p: int, m: int) -> np.ndarray:
    heads = _heads(p, m)
    out = np.zeros_like(values)
    u, a, b = np.nonzero(heads >= 0)
    out[heads[u, a, b], b, a] = values[u, a, b]
    return out


@lru_cache(maxsize=None)
def unit_routing(p: int, m: int, src: tuple[int, int], dst: tuple[int, int], exact: bool):
    """Move one unit from each vertex of facet ``src`` to each vertex of facet ``dst``.

    Pegs are 0-based sorted pairs. Grandchildren meeting both facets recurse;
    those meeting only one are matched in increasing order and joined by a
    transmission plus a routing on each side. Per-arc load never exceeds 1.
    """
    F = _zeros(p, m, exact)
    if m == 0 or src == dst:
        return _frozen(F)
    blk = p ** (m - 1)
    for c in range(p):
        if c not in src and c not in dst:
            F[c * blk : (c + 1) * blk] += unit_routing(p, m - 1, src, dst, exact)
    source_only = sorted(set(dst) - set(src))
    sink_only = sorted(set(src) - set(dst))
    for c, d in zip(source_only, sink_only):
        cd = _pair(c, d)
        F[c * blk : (c + 1) * blk] += unit_routing(p, m - 1, src, cd, exact)
        _add_transmission(F, p, m, c, d, 1)
        F[d * blk : (d + 1) * blk] += unit_routing(p, m - 1, cd, dst, exact)
    return _frozen(F)


@lru_cache(maxsize=None)
def unit_distribution(p: int, m: int, xy: tuple[int, int], exact: bool):
    """Spread one unit per vertex of facet F_xy evenly over all of H_p^m.

    Every vertex ends with demand ((p-2)/p)^m. Per-arc load is at most 1.
    """
    F = _zeros(p, m, exact)
    if m == 0:
        return _frozen(F)
    x, y = xy
    blk = p ** (m - 1)
    keep = _q(p - 2, p, exact)
    share = _q(1, p, exact)
    for k in range(p):
        if k in xy:
            continue
        F[k * blk : (k + 1) * blk] += keep * unit_distribution(p, m - 1, xy, exact)
        for z in (x, y):
            kz = _pair(k, z)
            F[k * blk : (k + 1) * blk] += share * unit_routing(p, m - 1, xy, kz, exact)
            _add_transmission(F, p, m, k, z, share)
            F[z * blk : (z + 1) * blk] += share * unit_distribution(p, m - 1, kz, exact)
    return _frozen(F)


@lru_cache(maxsize=None)
def unit_concentration(p: int, m: int, xy: tuple[int, int], exact: bool):
    return _frozen(_reverse(unit_distribution(p, m, xy, exact), p, m))


def _stage_scale(p: int, m: int, exact: bool) -> Number:
    """Per-source load each boundary vertex of H_p^m carries: |V(H_1)| / |boundary|."""
    return _q(p ** (m - 1), (p - 2) ** (m - 1), exact)


# -- stage flows on handles ---------------------------------------------------


def _check_owner(h: SubgraphHandle, f: Facet) -> tuple[int, int]:
    if f.owner != h:
        raise StructuralError("facet does not belong to this handle")
    i, j = sorted(f.excluded_pegs)
    return i - 1, j - 1


def _on_handle(values: np.ndarray, h: SubgraphHandle, exact: bool) -> ArcFlow:
    out = ArcFlow.zeros(h.p, h.n, exact)
    out.values[h.offset : h.offset + h.size] += values
    return out


def _check_siblings(h_i: SubgraphHandle, h_j: SubgraphHandle) -> None:
    if (h_i.p, h_i.n) != (h_j.p, h_j.n):
        raise StructuralError("handles belong to different graphs")
    if not h_i.fixed or h_i.parent_fixed != h_j.parent_fixed or h_i == h_j:
        raise StructuralError("transmission needs two distinct sibling handles")


def solve_transmission(
    h_i: SubgraphHandle, h_j: SubgraphHandle, amount_per_edge: Number, exact: bool = False
) -> ArcFlow:
    """Send ``amount_per_edge`` across every boundary edge from ``h_i`` to ``h_j``."""
    _check_siblings(h_i, h_j)
    if amount_per_edge < 0:
        raise ValueError("transmission amount must be nonnegative")
    f = ArcFlow.zeros(h_i.p, h_i.n, exact)
    if amount_per_edge == 0:
        return f
    i, j = h_i.label - 1, h_j.label - 1
    tails = facet(h_i, h_i.label, h_j.label).vertices
    f.values[tails, i, j] += amount_per_edge if not exact else Fraction(amount_per_edge)
    return f


def solve_distribution(
    h2: SubgraphHandle, source_facet: Facet, sigma: Number, exact: bool = False
) -> ArcFlow:
    """Spread ``sigma`` per source-facet vertex uniformly over ``h2``."""
    xy = _check_owner(h2, source_facet)
    return _on_handle(unit_distribution(h2.p, h2.m, xy, exact), h2, exact) * sigma


def solve_concentration(
    h1: SubgraphHandle, sink_facet: Facet, delta: Number, exact: bool = False
) -> ArcFlow:
    """Gather ``delta`` onto each sink-facet vertex, uniformly drawn from all of ``h1``."""
    xy = _check_owner(h1, sink_facet)
    return _on_handle(unit_concentration(h1.p, h1.m, xy, exact), h1, exact) * delta


def solve_routing(
    h: SubgraphHandle, source_facet: Facet, sink_facet: Facet, amount: Number,
    exact: bool = False,
) -> ArcFlow:
    """Move ``amount`` from each vertex of one facet to each vertex of another."""
    src = _check_owner(h, source_facet)
    dst = _check_owner(h, sink_facet)
    if len(source_facet) != len(sink_facet):
        raise ValueError("facets of different sizes")
    return _on_handle(unit_routing(h.p, h.m, src, dst, exact), h, exact) * amount


def solve_shuffle(s: int, h1: SubgraphHandle, recursive: "UniformMcf | None") -> ArcFlow:
    """Let ``s`` send one unit to every vertex of its own handle ``h1``.

    ``recursive`` is a per-commodity uniform flow on H_p^m with m = ``h1.m``;
    its per-source component for ``s`` (shifted to local indices) is reused
    verbatim and ``s`` keeps its own unit. A single-vertex handle needs no
    flow and accepts ``recursive=None``.
    """
    if h1.size == 1:
        if s not in h1:
            raise StructuralError(f"vertex {s} is not in the handle")
        return ArcFlow.zeros(h1.p, h1.n, True if recursive is None else recursive.exact)
    if (recursive.p, recursive.n) != (h1.p, h1.m):
        raise ValueError("recursive flow does not match the handle's size")
    if s not in h1:
        raise StructuralError(f"vertex {s} is not in the handle")
    if recursive.per_source is None:
        raise ValueError("shuffle needs the per-source components of the recursive flow")
    return _on_handle(recursive.per_source[s - h1.offset].values, h1, recursive.exact)


# -- problem tuples -----------------------------------------------------------


def stage_problems(p: int, n: int, s: int, b: int, exact: bool = True) -> dict[str, MsfProblem]:
    """The four stage problems and their composite for source ``s`` and target child ``b``.

    ``b`` is a 1-based peg label; ``s`` must lie in another child.
    """
    root = HanoiGraph(p, n).root()
    children = {h.label: h for h in partition_by_largest(root)}
    a = next(k for k, h in children.items() if s in h)
    if a == b:
        raise ValueError("source already lies in the target child")
    h1, h2 = children[a], children[b]
    N = h1.size
    sigma = _stage_scale(p, n, exact)
    one = 1
    f1 = facet(h1, a, b).vertices.tolist()
    f2 = facet(h2, a, b).vertices.tolist()
    return {
        "shuffle": MsfProblem({s: N}, {v: one for v in h1.vertices()}),
        "concentration": MsfProblem.uniform(h1.vertices(), f1, one, sigma),
        "transmission": MsfProblem.uniform(f1, f2, sigma, sigma),
        "distribution": MsfProblem.uniform(f2, h2.vertices(), sigma, one),
        "composite": MsfProblem({s: N}, {v: one for v in h2.vertices()}),
    }


# -- the full construction ----------------------------------------------------


@dataclass(frozen=True)
class LevelTerms:
    """Normalized congestion contributions at recursion level m."""

    level: int
    shuffle: Number
    transmission: Number
    concentration_distribution: Number
    rho: Number
    increment: Number


@dataclass(frozen=True)
class RecurrenceLedger:
    p: int
    n: int
    levels: tuple[LevelTerms, ...]

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.p, self.p - 2)

    @property
    def constant(self) -> Number:
        """Smallest C with increment_m <= C (p/(p-2))^m at every level."""
        return max(t.increment / self.ratio**t.level for t in self.levels)

    @property
    def analytic_constant(self) -> Fraction:
        """C implied by the per-arc stage bounds: 2(p-1)(p-2)/p^2.

        Each arc inside a child carries at most one concentration and one
        distribution per other child, each bounded by |V(H_1)| sigma.
        """
        p = self.p
        return Fraction(2 * (p - 1) * (p - 2), p * p)

    def bound_holds(self, constant: Number | None = None) -> bool:
        c = self.constant if constant is None else constant
        return all(t.increment <= c * self.ratio**t.level for t in self.levels)

    def as_records(self) -> list[dict]:
        return [
            {
                "level": t.level,
                "shuffle": render_number(t.shuffle),
                "transmission": render_number(t.transmission),
                "concentration_distribution": render_number(t.concentration_distribution),
                "rho": render_number(t.rho),
                "increment": render_number(t.increment),
            }
            for t in self.levels
        ]


@dataclass
class UniformMcf:
    p: int
    n: int
    exact: bool
    aggregate: ArcFlow
    report: CongestionReport
    ledger: RecurrenceLedger
    per_source: list[ArcFlow] | None = field(default=None, repr=False)

    @property
    def rho(self) -> Number:
        return self.report.normalized_congestion

    @property
    def lower_bound(self) -> Number:
        return expansion_lower_bound(self.rho)

    def to_json(self, witness_upper_bound: Number | None = None, **extra) -> str:
        record = {
            "p": self.p,
            "n": self.n,
            "levels": self.ledger.as_records(),
            "rho": render_number(self.rho),
            "lower_bound": render_number(self.lower_bound),
            "witness_upper_bound": (
                None if witness_upper_bound is None else render_number(witness_upper_bound)
            ),
            "constant": render_number(self.ledger.constant),
            "report": self.report.as_dict(),
        }
        record.update(extra)
        return json.dumps(record, sort_keys=True)


def _pair_stages(p: int, m: int, exact: bool):
    """Transmission and concentration+distribution parts for all ordered child pairs.

    Loads are per source and must be multiplied by the number of sources.
    """
    T = _zeros(p, m, exact)
    CD = _zeros(p, m, exact)
    blk = p ** (m - 1)
    sigma = _stage_scale(p, m, exact)
    for a in range(p):
        for b in range(p):
            if a == b:
                continue
            ab = _pair(a, b)
            CD[a * blk : (a + 1) * blk] += sigma * unit_concentration(p, m - 1, ab, exact)
            _add_transmission(T, p, m, a, b, sigma)
            CD[b * blk : (b + 1) * blk] += sigma * unit_distribution(p, m - 1, ab, exact)
    return T, CD


def _pair_stages_for_source(p: int, m: int, a: int, exact: bool) -> np.ndarray:
    G = _zeros(p, m, exact)
    blk = p ** (m - 1)
    sigma = _stage_scale(p, m, exact)
    for b in range(p):
        if b == a:
            continue
        ab = _pair(a, b)
        G[a * blk : (a + 1) * blk] += sigma * unit_concentration(p, m - 1, ab, exact)
        _add_transmission(G, p, m, a, b, sigma)
        G[b * blk : (b + 1) * blk] += sigma * unit_distribution(p, m - 1, ab, exact)
    return G


def _normalized(x, V: int, exact: bool) -> Number:
    return Fraction(x) / V if exact else float(x) / V


def build_uniform_mcf(
    p: int,
    n: int,
    mode: str = "aggregate",
    exact: bool = False,
    vertex_budget: int = PER_COMMODITY_BUDGET,
) -> UniformMcf:
    """Build the recursive uniform multicommodity flow on H_p^n.

    ``mode="aggregate"`` tracks only the commodity-summed arc loads;
    ``mode="per-commodity"`` also keeps, for every source ``s``, the flow
    carrying all of its commodities (allowed up to ``vertex_budget`` vertices).
    """
    if p < 3 or n < 1:
        raise ValueError(f"need p >= 3 and n >= 1, got p={p}, n={n}")
    if mode not in ("aggregate", "per-commodity"):
        raise ValueError(f"unknown mode {mode!r}")
    per_commodity = mode == "per-commodity"
    if per_commodity and p**n > vertex_budget:
        raise BudgetExceededError(
            f"per-commodity mode on {p**n} vertices exceeds the budget of {vertex_budget}"
        )

    A = _zeros(p, 0, exact)
    sources = [_zeros(p, 0, exact)] if per_commodity else None
    rho_prev: Number = 0
    levels = []
    for m in range(1, n + 1):
        V, N, blk = p**m, p ** (m - 1), p ** (m - 1)
        S = np.concatenate([p * A] * p)
        T, CD = _pair_stages(p, m, exact)
        A = S + N * T + N * CD
        rho = _normalized(A.max(), V, exact)
        levels.append(
            LevelTerms(
                level=m,
                shuffle=_normalized(S.max(), V, exact),
                transmission=_normalized(N * T.max(), V, exact),
                concentration_distribution=_normalized(N * CD.max(), V, exact),
                rho=rho,
                increment=rho - rho_prev,
            )
        )
        rho_prev = rho
        if per_commodity:
            nxt = []
            for a in range(p):
                G = _pair_stages_for_source(p, m, a, exact)
                for local in sources:
                    F = G.copy()
                    F[a * blk : (a + 1) * blk] += p * local
                    nxt.append(F)
            sources = nxt

    aggregate = ArcFlow(p, n, A, exact)
    ledger = RecurrenceLedger(p, n, tuple(levels))
    report = congestion(
        aggregate, per_level_terms=[(t.level, t.increment) for t in levels]
    )
    per_source = [ArcFlow(p, n, F, exact) for F in sources] if per_commodity else None
    return UniformMcf(p, n, exact, aggregate, report, ledger, per_source)


def recurrence_ledger(p: int, n: int, exact: bool = False) -> RecurrenceLedger:
    return build_uniform_mcf(p, n, exact=exact).ledger


# -- audits -------------------------------------------------------------------


@dataclass
class Audit:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def audit_uniform_mcf(mcf: UniformMcf) -> Audit:
    """Conservation audit of a per-commodity flow.

    For every source ``s``: its flow solves ({s}, V - {s}, |V| - 1, 1); for
    every other child ``b`` the stage chain shuffle, concentration,
    transmission, distribution validates stage by stage and composes into
    ({s}, V(H_b), |V(H_b)|, 1). The per-source flows sum to the aggregate,
    whose divergence vanishes everywhere.
    """
    if mcf.per_source is None:
        raise ValueError("audit needs a per-commodity flow")
    p, n, exact = mcf.p, mcf.n, mcf.exact
    V = p**n
    audit = Audit()

    def check(label: str, violations: list[Violation]) -> None:
        audit.checked += 1
        if violations:
            audit.failures.append(f"{label}: {violations[:3]}")

    total = ArcFlow.zeros(p, n, exact)
    for s, f in enumerate(mcf.per_source):
        pi = MsfProblem({s: V - 1}, {t: 1 for t in range(V) if t != s})
        check(f"source {s}", validate_msf(f, pi))
        total = total + f
    if total != mcf.aggregate:
        audit.failures.append("per-source flows do not sum to the aggregate")
    audit.checked += 1
    check("aggregate", validate_msf(mcf.aggregate, MsfProblem({}, {})))

    sub = None
    if n >= 2:
        sub = build_uniform_mcf(p, n - 1, mode="per-commodity", exact=exact, vertex_budget=V)
    for s in range(V):
        for b in range(1, p + 1):
            _audit_chain(audit, check, p, n, s, b, sub, exact)
    return audit


def _audit_chain(audit, check, p, n, s, b, sub, exact) -> None:
    root = HanoiGraph(p, n).root()
    children = {h.label: h for h in partition_by_largest(root)}
    a = next(k for k, h in children.items() if s in h)
    if a == b:
        return
    h1, h2 = children[a], children[b]
    probs = stage_problems(p, n, s, b, exact)
    sigma = _stage_scale(p, n, exact)
    flows = {
        "shuffle": solve_shuffle(s, h1, sub),
        "concentration": solve_concentration(h1, facet(h1, a, b), sigma, exact),
        "transmission": solve_transmission(h1, h2, sigma, exact),
        "distribution": solve_distribution(h2, facet(h2, a, b), sigma, exact),
    }
    for stage, f in flows.items():
        check(f"s={s} b={b} {stage}", validate_msf(f, probs[stage]))
    f, pi = flows["shuffle"], probs["shuffle"]
    for stage in ("concentration", "transmission", "distribution"):
        f, pi = compose(f, flows[stage], pi, probs[stage])
    if pi != probs["composite"]:
        audit.failures.append(f"s={s} b={b}: composed problem differs from pi_s")
    check(f"s={s} b={b} composite", validate_msf(f, probs["composite"]))
