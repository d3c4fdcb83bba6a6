"""Hanoi graphs H_p^n: configurations, legal moves, recursive partition, facets.

Vertices are identified by the little-endian base-p index of their
configuration: disc 1 (the smallest) is the least significant digit, and
peg labels 1..p map to digits 0..p-1. The index codec is a stable contract;
every flow, cut and witness emitted by this package is keyed by it.

A useful consequence of the codec: pinning the largest discs to fixed pegs
selects a *contiguous* block of indices, so a subgraph handle is nothing but
an ``(offset, size)`` pair inside its parent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterable, Sequence

import numpy as np

Configuration = tuple[int, ...]

DEFAULT_VERTEX_BUDGET = 10**6


class InvalidConfigurationError(ValueError):
    pass


class PartitionError(ValueError):
    pass


class InvalidFacetError(ValueError):
    pass


class StructuralError(ValueError):
    pass


class BudgetExceededError(ValueError):
    """A requested computation is larger than its configured vertex budget."""


def _check_pn(p: int, n: int) -> None:
    if p < 3:
        raise ValueError(f"Hanoi graphs need p >= 3 pegs, got p={p}")
    if n < 0:
        raise ValueError(f"disc count must be non-negative, got n={n}")


def config_to_index(config: Sequence[int], p: int) -> int:
    """Encode a configuration (pegs 1..p, disc 1 first) as a vertex index."""
    index = 0
    for i, peg in enumerate(config):
        if not 1 <= peg <= p:
            raise InvalidConfigurationError(
                f"disc {i + 1} sits on peg {peg}, outside 1..{p}"
            )
        index += (peg - 1) * p**i
    return index


def index_to_config(index: int, p: int, n: int) -> Configuration:
    index = int(index)
    if not 0 <= index < p**n:
        raise InvalidConfigurationError(f"index {index} outside 0..{p**n - 1}")
    pegs = []
    for _ in range(n):
        index, digit = divmod(index, p)
        pegs.append(digit + 1)
    return tuple(pegs)


def _top_discs(config: Sequence[int], p: int) -> list[int]:
    """0-based index of the smallest disc on each (0-based) peg, n if empty."""
    n = len(config)
    top = [n] * p
    for disc in range(n - 1, -1, -1):
        top[config[disc] - 1] = disc
    return top


def empty_pegs(config: Sequence[int], p: int) -> int:
    return p - len(set(config))


def neighbors_of(config: Sequence[int], p: int) -> set[Configuration]:
    """Configurations one legal move away from ``config``.

    For every pair of pegs with at least one disc, exactly one move exists:
    the smaller of the two top discs goes onto the other peg.
    """
    config = tuple(config)
    config_to_index(config, p)  # validation
    top = _top_discs(config, p)
    out = set()
    for a in range(p):
        for b in range(p):
            if a != b and top[a] < top[b]:
                moved = list(config)
                moved[top[a]] = b + 1
                out.add(tuple(moved))
    return out


def degree_formula(config: Sequence[int], p: int) -> int:
    return comb(p, 2) - comb(empty_pegs(config, p), 2)


def move_table(p: int, n: int) -> np.ndarray:
    """Heads of all moves of H_p^n as an int array of shape ``(p**n, p, p)``.

    ``table[u, a, b]`` is the index reached from ``u`` by moving the top disc
    of (0-based) peg ``a`` onto peg ``b``, or -1 when that move is illegal.
    """
    _check_pn(p, n)
    return _move_rows(p, n, 0, p**n)


@dataclass(frozen=True)
class HanoiGraph:
    """The Hanoi graph H_p^n.

    Adjacency is generated on demand. With ``cached=True`` the move table is
    materialized once (refused above ``vertex_budget`` vertices).
    """

    p: int
    n: int
    cached: bool = False
    vertex_budget: int = DEFAULT_VERTEX_BUDGET

    def __post_init__(self):
        _check_pn(self.p, self.n)
        if self.n < 1:
            raise ValueError("HanoiGraph needs at least one disc")
        if self.cached and self.vertex_count > self.vertex_budget:
            raise ValueError(
                f"cached adjacency for {self.vertex_count} vertices exceeds "
                f"budget {self.vertex_budget}"
            )

    @property
    def vertex_count(self) -> int:
        return self.p**self.n

    @property
    def max_degree(self) -> int:
        """C(p,2) once n >= p-1; with fewer discs some peg is always empty."""
        return comb(self.p, 2) - comb(max(self.p - self.n, 0), 2)

    def vertices(self) -> range:
        return range(self.vertex_count)

    def config(self, index: int) -> Configuration:
        return index_to_config(index, self.p, self.n)

    def index(self, config: Sequence[int]) -> int:
        if len(config) != self.n:
            raise InvalidConfigurationError(
                f"configuration has {len(config)} discs, graph has {self.n}"
            )
        return config_to_index(config, self.p)

    def neighbors(self, v: Sequence[int]) -> set[Configuration]:
        self.index(v)
        return neighbors_of(v, self.p)

    def neighbor_indices(self, u: int) -> list[int]:
        if self.cached:
            row = self._table[u]
            return sorted(int(x) for x in row[row >= 0])
        return sorted(self.index(c) for c in neighbors_of(self.config(u), self.p))

    @cached_property
    def _table(self) -> np.ndarray:
        return move_table(self.p, self.n)

    def moves(self) -> np.ndarray:
        """Move table (see :func:`move_table`)."""
        if self.cached:
            return self._table
        return move_table(self.p, self.n)

    def adjacency(self) -> list[list[int]]:
        table = self.moves()
        return [sorted(int(x) for x in row[row >= 0]) for row in table]

    def edges(self) -> list[tuple[int, int]]:
        table = self.moves()
        u = np.repeat(np.arange(self.vertex_count), self.p * self.p)
        v = table.reshape(-1)
        keep = v > u
        return list(zip(u[keep].tolist(), v[keep].tolist()))

    def root(self) -> "SubgraphHandle":
        return SubgraphHandle(self.p, self.n, ())


def edge_count(g: HanoiGraph) -> int:
    """Number of edges via E_m = p E_{m-1} + C(p,2) (p-2)^(m-1), E_0 = 0."""
    e = 0
    for m in range(1, g.n + 1):
        e = g.p * e + comb(g.p, 2) * (g.p - 2) ** (m - 1)
    return e


@dataclass(frozen=True)
class SubgraphHandle:
    """A copy of H_p^m inside H_p^n obtained by pinning the largest discs.

    ``fixed`` lists the 1-based pegs of discs m+1, ..., n in that order.
    """

    p: int
    n: int
    fixed: tuple[int, ...]

    def __post_init__(self):
        if len(self.fixed) > self.n:
            raise StructuralError("more pinned discs than discs")
        for peg in self.fixed:
            if not 1 <= peg <= self.p:
                raise InvalidConfigurationError(f"peg {peg} outside 1..{self.p}")

    @property
    def m(self) -> int:
        return self.n - len(self.fixed)

    @property
    def size(self) -> int:
        return self.p**self.m

    @property
    def offset(self) -> int:
        return sum((peg - 1) * self.p ** (self.m + i) for i, peg in enumerate(self.fixed))

    def vertices(self) -> range:
        return range(self.offset, self.offset + self.size)

    def __contains__(self, index: int) -> bool:
        return self.offset <= index < self.offset + self.size

    @property
    def parent_fixed(self) -> tuple[int, ...]:
        return self.fixed[1:]

    @property
    def label(self) -> int:
        """Peg holding the most recently pinned disc."""
        if not self.fixed:
            raise StructuralError("the root handle has no label")
        return self.fixed[0]


def partition_by_largest(h: SubgraphHandle) -> list[SubgraphHandle]:
    if h.m < 1:
        raise PartitionError("a single-vertex handle cannot be partitioned")
    return [SubgraphHandle(h.p, h.n, (k,) + h.fixed) for k in range(1, h.p + 1)]


def facet_local(p: int, m: int, i: int, j: int) -> np.ndarray:
    """Sorted local indices of F_ij(H_p^m); pegs ``i``, ``j`` are 0-based."""
    allowed = [k for k in range(p) if k not in (i, j)]
    if m == 0:
        return np.zeros(1, dtype=np.int64)
    weights = p ** np.arange(m, dtype=np.int64)
    grid = np.array(list(itertools.product(allowed, repeat=m)), dtype=np.int64)
    return np.sort(grid @ weights)


@dataclass(frozen=True)
class Facet:
    owner: SubgraphHandle
    excluded_pegs: frozenset[int]
    vertices: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    def as_set(self) -> set[int]:
        return set(self.vertices.tolist())


def facet(h: SubgraphHandle, i: int, j: int) -> Facet:
    """F_ij(h): vertices of ``h`` whose free discs avoid pegs ``i`` and ``j``."""
    if i == j:
        raise InvalidFacetError(f"a facet needs two distinct pegs, got {i} twice")
    for peg in (i, j):
        if not 1 <= peg <= h.p:
            raise InvalidFacetError(f"peg {peg} outside 1..{h.p}")
    local = facet_local(h.p, h.m, i - 1, j - 1)
    return Facet(h, frozenset((i, j)), local + h.offset)


def boundary(
    h_i: SubgraphHandle, h_j: SubgraphHandle
) -> tuple[set[int], set[int], list[tuple[int, int]]]:
    """Boundary vertices of each sibling and the edges between them.

    Computed by scanning legal moves, independently of the facet formula.
    Edges are returned as ``(u, v)`` with ``u`` in ``h_i``, sorted.
    """
    if h_i.p != h_j.p or h_i.n != h_j.n:
        raise StructuralError("handles belong to different graphs")
    if not h_i.fixed or h_i.parent_fixed != h_j.parent_fixed or h_i == h_j:
        raise StructuralError("boundary needs two distinct sibling handles")
    p, n = h_i.p, h_i.n
    rows = _move_rows(p, n, h_i.offset, h_i.size)
    lo, hi = h_j.offset, h_j.offset + h_j.size
    tails = np.repeat(np.arange(h_i.offset, h_i.offset + h_i.size), p * p)
    heads = rows.reshape(-1)
    cross = (heads >= lo) & (heads < hi)
    edges = sorted(zip(tails[cross].tolist(), heads[cross].tolist()))
    return {u for u, _ in edges}, {v for _, v in edges}, edges


def _move_rows(p: int, n: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.int64)
    digits = np.empty((count, n), dtype=np.int64)
    rest = idx.copy()
    for i in range(n):
        rest, digits[:, i] = np.divmod(rest, p)
    top = np.full((count, p), n, dtype=np.int64)
    local = np.arange(count)
    for disc in range(n - 1, -1, -1):
        top[local, digits[:, disc]] = disc
    powers = p ** np.minimum(top, max(n - 1, 0))
    table = np.full((count, p, p), -1, dtype=np.int64)
    for a in range(p):
        for b in range(p):
            if a != b:
                legal = top[:, a] < top[:, b]
                table[legal, a, b] = idx[legal] + (b - a) * powers[legal, a]
    return table


def sibling_pairs(h: SubgraphHandle) -> Iterable[tuple[SubgraphHandle, SubgraphHandle]]:
    children = partition_by_largest(h)
    return itertools.combinations(children, 2)


def matching_size(p: int, n: int) -> int:
    """Number of edges between two top-level children of H_p^n."""
    return (p - 2) ** (n - 1)
