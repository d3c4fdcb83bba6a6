"""Exact ground truth on small graphs: expansion, vertex expansion, treewidth.

Graphs are given as adjacency lists over vertices ``0..V-1`` (a
:class:`~hanoiflow.hanoi.HanoiGraph` or a networkx graph is converted with
:func:`as_adjacency`). Vertex sets are handled as integer bitmasks.

Edge expansion only needs connected sets: if S splits into components, both
numerator and denominator are additive over them, so the best component is
at least as good. Vertex expansion is *not* additive over plain components
(two leaves of a star share their outside neighbour), but it is additive
over components of S in the square graph G^2, so that search enumerates
G^2-connected sets instead.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .hanoi import BudgetExceededError, HanoiGraph, partition_by_largest

EXPANSION_BUDGET = 30
TREEWIDTH_BUDGET = 20


class DisconnectedGraphError(ValueError):
    pass


def as_adjacency(g) -> list[list[int]]:
    """Adjacency lists for a HanoiGraph, a networkx graph, or a list of lists."""
    if isinstance(g, HanoiGraph):
        return g.adjacency()
    if hasattr(g, "adj") and hasattr(g, "nodes"):
        nodes = sorted(g.nodes)
        if nodes != list(range(len(nodes))):
            raise ValueError("networkx graphs must be labelled 0..V-1")
        return [sorted(g.adj[v]) for v in nodes]
    adj = [sorted(set(int(x) for x in row)) for row in g]
    for u, row in enumerate(adj):
        for v in row:
            if v == u or u not in adj[v]:
                raise ValueError(f"adjacency is not simple and symmetric at ({u}, {v})")
    return adj


def _masks(adj: Sequence[Sequence[int]]) -> list[int]:
    return [sum(1 << v for v in row) for row in adj]


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def is_connected(adj: Sequence[Sequence[int]]) -> bool:
    if not adj:
        return True
    nbr = _masks(adj)
    seen = frontier = 1
    while frontier:
        grow = 0
        for v in _bits(frontier):
            grow |= nbr[v]
        frontier = grow & ~seen
        seen |= frontier
    return seen == (1 << len(adj)) - 1


@dataclass(frozen=True)
class CutWitness:
    vertices: tuple[int, ...]
    boundary: int
    kind: str = "edge"

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.boundary, len(self.vertices))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": list(self.vertices),
            "boundary": self.boundary,
            "ratio": str(self.ratio),
        }


def edge_boundary(adj, S) -> int:
    S = set(S)
    return sum(1 for u in S for v in adj[u] if v not in S)


def vertex_boundary(adj, S) -> int:
    S = set(S)
    return len({v for u in S for v in adj[u] if v not in S})


# -- brute force over all subsets ----------------------------------------------


def brute_force_expansion(g, kind: str = "edge") -> tuple[Fraction, CutWitness]:
    """Minimum ratio over *all* subsets with |S| <= |V|/2 (tiny graphs only)."""
    adj = as_adjacency(g)
    V = len(adj)
    if V > 20:
        raise BudgetExceededError("brute force is limited to 20 vertices")
    measure = edge_boundary if kind == "edge" else vertex_boundary
    best = None
    for k in range(1, V // 2 + 1):
        for S in itertools.combinations(range(V), k):
            key = (Fraction(measure(adj, S), k), S)
            if best is None or key < best:
                best = key
    if best is None:
        raise ValueError("expansion needs at least two vertices")
    ratio, S = best
    return ratio, CutWitness(S, measure(adj, S), kind)


# -- connected-set branch and bound --------------------------------------------


class _Search:
    """Enumerate connected sets rooted at their minimum vertex, with pruning.

    Each node of the search fixes a set S and a set of *excluded* vertices
    that no extension may contain. Edges (or outside neighbours) between S
    and the excluded set stay on the boundary of every extension, which
    gives the lower bound used for pruning.
    """

    def __init__(self, adj, kind: str, best: tuple[int, int, tuple] | None):
        self.kind = kind
        self.nbr = _masks(adj)
        self.deg = [len(row) for row in adj]
        self.V = len(adj)
        self.maxsize = self.V // 2
        if kind == "edge":
            self.grow = self.nbr
        else:
            self.grow = [
                (self.nbr[v] | _union(self.nbr, self.nbr[v])) & ~(1 << v)
                for v in range(self.V)
            ]
        # incumbent: (boundary, size, sorted vertices or None)
        self.best = best
        self.nodes = 0

    def _offer(self, boundary: int, size: int, S: int) -> None:
        b = self.best
        if b is not None:
            lhs, rhs = boundary * b[1], b[0] * size
            if lhs > rhs:
                return
            if lhs == rhs and b[2] is not None:
                cand = tuple(_bits(S))
                if cand >= b[2]:
                    return
                self.best = (boundary, size, cand)
                return
        self.best = (boundary, size, tuple(_bits(S)))

    def _pruned(self, fixed: int) -> bool:
        b = self.best
        return b is not None and fixed * b[1] > b[0] * self.maxsize

    def run_root(self, r: int) -> None:
        excluded = (1 << r) - 1
        S = 1 << r
        if self.kind == "edge":
            boundary = self.deg[r]
            fixed = (self.nbr[r] & excluded).bit_count()
            self._edge(S, 1, boundary, self.grow[r] & ~excluded, excluded, fixed)
        else:
            reach = self.nbr[r]
            self._vertex(S, 1, reach, self.grow[r] & ~excluded, excluded)

    def _edge(self, S, size, boundary, frontier, excluded, fixed):
        self.nodes += 1
        self._offer(boundary, size, S)
        if size == self.maxsize or self._pruned(fixed):
            return
        nbr, deg = self.nbr, self.deg
        while frontier:
            low = frontier & -frontier
            v = low.bit_length() - 1
            frontier ^= low
            nv = nbr[v]
            inner = (nv & S).bit_count()
            self._edge(
                S | low,
                size + 1,
                boundary + deg[v] - 2 * inner,
                (frontier | nv) & ~(S | low) & ~excluded,
                excluded,
                fixed + (nv & excluded).bit_count(),
            )
            excluded |= low
            fixed += inner
            if self._pruned(fixed):
                return

    def _vertex(self, S, size, reach, frontier, excluded):
        # reach: union of neighbourhoods of S (may include S itself)
        self.nodes += 1
        self._offer((reach & ~S).bit_count(), size, S)
        if size == self.maxsize or self._pruned((reach & excluded).bit_count()):
            return
        while frontier:
            low = frontier & -frontier
            v = low.bit_length() - 1
            frontier ^= low
            S2 = S | low
            self._vertex(
                S2,
                size + 1,
                reach | self.nbr[v],
                (frontier | self.grow[v]) & ~S2 & ~excluded,
                excluded,
            )
            excluded |= low
            if self._pruned((reach & excluded).bit_count()):
                return


def _union(nbr: list[int], mask: int) -> int:
    out = 0
    for v in _bits(mask):
        out |= nbr[v]
    return out


def _search_roots(args):
    adj, kind, best, roots = args
    search = _Search(adj, kind, best)
    for r in roots:
        search.run_root(r)
    return search.best, search.nodes


def _exact_expansion(g, kind: str, budget: int, upper_bound, workers: int):
    adj = as_adjacency(g)
    V = len(adj)
    if V > budget:
        raise BudgetExceededError(
            f"exact {kind} expansion on {V} vertices exceeds the budget of {budget}; "
            "use the flow lower bound and witness upper bound instead"
        )
    if V < 2:
        raise ValueError("expansion needs at least two vertices")
    if not is_connected(adj):
        raise DisconnectedGraphError("expansion oracles require a connected graph")
    best = None
    if upper_bound is not None:
        ub = Fraction(upper_bound)
        best = (ub.numerator, ub.denominator, None)
    if workers <= 1:
        results = [_search_roots((adj, kind, best, range(V)))]
    else:
        chunks = [list(range(V))[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_search_roots, [(adj, kind, best, c) for c in chunks]))
    found = [r for r, _ in results if r is not None and r[2] is not None]
    if not found:
        if upper_bound is None:
            raise AssertionError("search found no set")
        return _exact_expansion(adj, kind, budget, None, workers)
    boundary, size, S = min(found, key=lambda r: (Fraction(r[0], r[1]), r[2]))
    return Fraction(boundary, size), CutWitness(S, boundary, kind)


def exact_edge_expansion(
    g, budget: int = EXPANSION_BUDGET, upper_bound=None, workers: int = 1
) -> tuple[Fraction, CutWitness]:
    """Exact h(G) = min |dS| / |S| over |S| <= |V|/2, with an optimal connected witness.

    ``upper_bound`` (e.g. a known cut ratio) seeds the incumbent and speeds up
    pruning; ties are broken towards the lexicographically smallest set.
    """
    return _exact_expansion(g, "edge", budget, upper_bound, workers)


def exact_vertex_expansion(
    g, budget: int = EXPANSION_BUDGET, upper_bound=None, workers: int = 1
) -> tuple[Fraction, CutWitness]:
    """Exact h_v(G), searching sets that are connected in G^2."""
    return _exact_expansion(g, "vertex", budget, upper_bound, workers)


def connected_only_expansion(g, kind: str = "edge") -> Fraction:
    """Minimum ratio over sets connected in G itself, without pruning.

    Sound for edge expansion; for vertex expansion it can overshoot, which
    is why :func:`exact_vertex_expansion` searches G^2-connected sets.
    """
    adj = as_adjacency(g)
    nbr = _masks(adj)
    maxsize = len(adj) // 2
    measure = edge_boundary if kind == "edge" else vertex_boundary
    best = None

    def walk(S, size, frontier, excluded):
        nonlocal best
        r = Fraction(measure(adj, _bits(S)), size)
        best = r if best is None else min(best, r)
        if size == maxsize:
            return
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            grown = (frontier | nbr[low.bit_length() - 1]) & ~(S | low) & ~excluded
            walk(S | low, size + 1, grown, excluded)
            excluded |= low

    for r in range(len(adj)):
        walk(1 << r, 1, nbr[r] & ~((1 << r) - 1), (1 << r) - 1)
    return best


def witness_cut_bound(p: int, n: int) -> Fraction:
    """Ratio of the cut around one top-level child: (p-1)(p-2)^(n-1) / p^(n-1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Fraction((p - 1) * (p - 2) ** (n - 1), p ** (n - 1))


def witness_cut(g: HanoiGraph, peg: int = 1) -> CutWitness:
    """The child subgraph with the largest disc on ``peg``, measured on the graph."""
    child = partition_by_largest(g.root())[peg - 1]
    adj = g.adjacency()
    vertices = tuple(child.vertices())
    return CutWitness(vertices, edge_boundary(adj, vertices))


# -- treewidth -------------------------------------------------------------------


@dataclass(frozen=True)
class TreewidthCertificate:
    width: int
    order: tuple[int, ...]
    exhaustive: bool = True

    def as_dict(self) -> dict:
        return {"width": self.width, "order": list(self.order), "exhaustive": self.exhaustive}


def elimination_width(g, order: Sequence[int]) -> int:
    """Width of the tree decomposition induced by eliminating ``order``.

    Simulates elimination with explicit fill-in; independent of the DP.
    """
    adj = [set(row) for row in as_adjacency(g)]
    if sorted(order) != list(range(len(adj))):
        raise ValueError("order must be a permutation of the vertices")
    width = 0
    for v in order:
        nb = adj[v]
        width = max(width, len(nb))
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        adj[v] = set()
    return width


def _greedy_order(nbr: list[int], V: int) -> list[int]:
    adj = list(nbr)
    alive = (1 << V) - 1
    order = []
    for _ in range(V):
        v = min(_bits(alive), key=lambda x: ((adj[x] & alive).bit_count(), x))
        nb = adj[v] & alive & ~(1 << v)
        for a in _bits(nb):
            adj[a] |= nb & ~(1 << a)
        alive &= ~(1 << v)
        order.append(v)
    return order


def _q_size(nbr: list[int], S: int, v: int) -> int:
    """|Q(S, v)|: vertices outside S + v reachable from v through S."""
    seen = frontier = 1 << v
    out = 0
    while frontier:
        grow = 0
        for u in _bits(frontier):
            grow |= nbr[u]
        out |= grow & ~S
        frontier = grow & S & ~seen
        seen |= frontier
    return (out & ~(1 << v)).bit_count()


def exact_treewidth(g, budget: int = TREEWIDTH_BUDGET) -> TreewidthCertificate:
    """Exact treewidth by dynamic programming over eliminated vertex sets.

    TW(S) = min over v in S of max(TW(S - v), |Q(S - v, v)|), where Q is the
    set of uneliminated vertices v reaches through S. States whose value
    already reaches a greedy upper bound are dropped.
    """
    adj = as_adjacency(g)
    V = len(adj)
    if V > budget:
        raise BudgetExceededError(
            f"treewidth DP on {V} vertices exceeds the budget of {budget}"
        )
    if V == 0:
        return TreewidthCertificate(-1, ())
    nbr = _masks(adj)
    greedy = _greedy_order(nbr, V)
    ub = elimination_width(adj, greedy)
    full = (1 << V) - 1
    layer: dict[int, tuple[int, int]] = {0: (-1, -1)}
    parents: dict[int, int] = {}
    for _ in range(V):
        nxt: dict[int, tuple[int, int]] = {}
        for S, (tw, _) in layer.items():
            for v in _bits(full & ~S):
                val = max(tw, _q_size(nbr, S, v))
                if val >= ub:
                    continue
                T = S | (1 << v)
                old = nxt.get(T)
                if old is None or val < old[0]:
                    nxt[T] = (val, v)
        for T, (_, v) in nxt.items():
            parents[T] = v
        layer = nxt
        if not layer:
            break
    if full in layer:
        order = []
        S = full
        while S:
            v = parents[S]
            order.append(v)
            S &= ~(1 << v)
        order.reverse()
        width = layer[full][0]
        return TreewidthCertificate(width, tuple(order))
    return TreewidthCertificate(ub, tuple(greedy))


# -- relations -------------------------------------------------------------------


def check_relations(h, h_v, max_degree: int, t: int, vertex_count: int) -> list[str]:
    """Violated links of h_v <= h <= D h_v <= 3 D (t+1) / |V|; empty when all hold."""
    h, h_v = Fraction(h), Fraction(h_v)
    top = Fraction(3 * max_degree * (t + 1), vertex_count)
    failed = []
    if not h_v <= h:
        failed.append(f"h_v <= h: {h_v} > {h}")
    if not h <= max_degree * h_v:
        failed.append(f"h <= D*h_v: {h} > {max_degree * h_v}")
    if not max_degree * h_v <= top:
        failed.append(f"D*h_v <= 3D(t+1)/|V|: {max_degree * h_v} > {top}")
    return failed


def treewidth_lower_bound_from_expansion(h, max_degree: int, vertex_count: int) -> Fraction:
    """t >= |V| h / (3 D) - 1, from the inequality chain."""
    return Fraction(vertex_count) * Fraction(h) / (3 * max_degree) - 1
