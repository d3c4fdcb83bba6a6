import itertools
from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hanoiflow.hanoi import (
    HanoiGraph,
    InvalidConfigurationError,
    InvalidFacetError,
    PartitionError,
    StructuralError,
    SubgraphHandle,
    boundary,
    config_to_index,
    degree_formula,
    edge_count,
    empty_pegs,
    facet,
    index_to_config,
    matching_size,
    move_table,
    partition_by_largest,
)


def brute_neighbors(config, p):
    """Legal moves by literal puzzle rules, independent of the package."""
    out = set()
    for disc, peg in enumerate(config):
        if any(config[d] == peg for d in range(disc)):
            continue  # a smaller disc sits on top
        for target in range(1, p + 1):
            if target != peg and not any(config[d] == target for d in range(disc)):
                moved = list(config)
                moved[disc] = target
                out.add(tuple(moved))
    return out


def brute_graph(p, n):
    g = nx.Graph()
    for c in itertools.product(range(1, p + 1), repeat=n):
        u = config_to_index(c, p)
        g.add_node(u)
        for d in brute_neighbors(c, p):
            g.add_edge(u, config_to_index(d, p))
    return g


# -- codec ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "config, p, index", [((1, 1, 1), 3, 0), ((2, 1), 3, 1), ((3, 3), 3, 8)]
)
def test_codec_examples(config, p, index):
    assert config_to_index(config, p) == index
    assert index_to_config(index, p, len(config)) == config


@pytest.mark.parametrize("p", [3, 4, 5])
@pytest.mark.parametrize("n", range(1, 6))
def test_codec_round_trip(p, n):
    for k in range(p**n):
        assert config_to_index(index_to_config(k, p, n), p) == k


@given(st.integers(3, 7).flatmap(lambda p: st.tuples(st.just(p), st.lists(st.integers(1, p), min_size=1, max_size=8))))
def test_codec_round_trip_property(pc):
    p, config = pc
    k = config_to_index(config, p)
    assert index_to_config(k, p, len(config)) == tuple(config)


def test_codec_rejects_bad_input():
    with pytest.raises(InvalidConfigurationError):
        config_to_index((1, 4), 3)
    with pytest.raises(InvalidConfigurationError):
        config_to_index((0,), 3)
    with pytest.raises(InvalidConfigurationError):
        index_to_config(9, 3, 2)


# -- adjacency -----------------------------------------------------------------


def test_neighbor_examples():
    g = HanoiGraph(3, 2)
    assert g.neighbors((1, 1)) == {(2, 1), (3, 1)}
    assert g.neighbors((2, 1)) == {(1, 1), (3, 1), (2, 3)}
    assert HanoiGraph(4, 1).neighbors((1,)) == {(2,), (3,), (4,)}


def test_neighbors_reject_wrong_length():
    with pytest.raises(InvalidConfigurationError):
        HanoiGraph(3, 2).neighbors((1, 1, 1))


@pytest.mark.parametrize("p, n", [(3, 1), (3, 2), (3, 4), (4, 3), (5, 2), (6, 2)])
def test_adjacency_matches_puzzle_rules(p, n):
    g = HanoiGraph(p, n)
    ref = brute_graph(p, n)
    assert sorted(g.edges()) == sorted(tuple(sorted(e)) for e in ref.edges())
    cached = HanoiGraph(p, n, cached=True)
    for u in g.vertices():
        assert g.neighbor_indices(u) == sorted(ref[u]) == cached.neighbor_indices(u)


@pytest.mark.parametrize("p", [3, 4, 5])
@pytest.mark.parametrize("n", range(1, 5))
def test_degree_formula(p, n):
    g = HanoiGraph(p, n)
    deg = (g.moves() >= 0).sum(axis=(1, 2))
    for k in g.vertices():
        c = g.config(k)
        assert deg[k] == degree_formula(c, p) == comb(p, 2) - comb(empty_pegs(c, p), 2)
    assert deg.max() == g.max_degree
    if n >= p - 1:
        assert g.max_degree == comb(p, 2)


def test_move_table_is_an_involution():
    t = move_table(4, 3)
    u, a, b = np.nonzero(t >= 0)
    assert np.array_equal(t[t[u, a, b], b, a], u)


@pytest.mark.parametrize(
    "p, n, count", [(3, 1, 3), (3, 2, 12), (4, 2, 36), (3, 5, 363), (5, 3, 490)]
)
def test_edge_count(p, n, count):
    g = HanoiGraph(p, n)
    assert edge_count(g) == count == len(g.edges())


def test_graph_guards():
    with pytest.raises(ValueError):
        HanoiGraph(2, 1)
    with pytest.raises(ValueError):
        HanoiGraph(3, 0)
    with pytest.raises(ValueError):
        HanoiGraph(3, 13, cached=True, vertex_budget=10**6)


# -- partition, facets, boundaries ---------------------------------------------


def test_partition_examples():
    kids = partition_by_largest(HanoiGraph(3, 2).root())
    assert [k.size for k in kids] == [3, 3, 3]
    assert [k.size for k in partition_by_largest(HanoiGraph(4, 3).root())] == [16] * 4
    g = HanoiGraph(3, 3)
    second = partition_by_largest(g.root())[1]
    assert set(second.vertices()) == {k for k in g.vertices() if g.config(k)[-1] == 2}
    assert second.size == 9


def test_nested_handles_pin_suffixes():
    g = HanoiGraph(4, 4)
    h = partition_by_largest(partition_by_largest(g.root())[2])[1]
    assert h.fixed == (2, 3) and h.m == 2
    assert {g.config(k)[2:] for k in h.vertices()} == {(2, 3)}


def test_partition_of_single_vertex_fails():
    with pytest.raises(PartitionError):
        partition_by_largest(SubgraphHandle(3, 2, (1, 2)))


def test_facet_examples():
    g32 = HanoiGraph(3, 2)
    f = facet(g32.root(), 1, 2)
    assert [g32.config(v) for v in f.vertices] == [(3, 3)]
    assert len(facet(HanoiGraph(4, 2).root(), 1, 3)) == 4
    for p in (3, 4, 5, 6):
        for i, j in itertools.combinations(range(1, p + 1), 2):
            assert len(facet(HanoiGraph(p, 1).root(), i, j)) == p - 2


def test_facet_guards():
    root = HanoiGraph(3, 2).root()
    with pytest.raises(InvalidFacetError):
        facet(root, 2, 2)
    with pytest.raises(InvalidFacetError):
        facet(root, 1, 4)


@pytest.mark.parametrize("p", [3, 4, 5])
@pytest.mark.parametrize("n", range(1, 6))
def test_facet_is_defined_by_peg_avoidance(p, n):
    g = HanoiGraph(p, n)
    for h in [g.root()] + partition_by_largest(g.root()):
        for i, j in itertools.combinations(range(1, p + 1), 2):
            expected = {
                k for k in h.vertices() if not {i, j} & set(g.config(k)[: h.m])
            }
            got = facet(h, i, j)
            assert got.as_set() == expected
            assert len(got) == (p - 2) ** h.m


@pytest.mark.parametrize("p", [3, 4, 5])
@pytest.mark.parametrize("n", range(2, 7))
def test_sibling_boundary_is_matching_onto_facets(p, n):
    root = HanoiGraph(p, n).root()
    kids = partition_by_largest(root)
    for a, b in itertools.combinations(kids, 2):
        b_a, b_b, edges = boundary(a, b)
        assert len(edges) == matching_size(p, n) == (p - 2) ** (n - 1)
        assert len({u for u, _ in edges}) == len({v for _, v in edges}) == len(edges)
        assert b_a == facet(a, a.label, b.label).as_set()
        assert b_b == facet(b, a.label, b.label).as_set()


def test_boundary_examples():
    g = HanoiGraph(3, 2)
    h1, h2, _ = partition_by_largest(g.root())
    _, _, edges = boundary(h1, h2)
    assert [(g.config(u), g.config(v)) for u, v in edges] == [((3, 1), (3, 2))]
    kids = partition_by_largest(HanoiGraph(4, 3).root())
    assert all(len(boundary(a, b)[2]) == 4 for a, b in itertools.combinations(kids, 2))
    kids = partition_by_largest(HanoiGraph(3, 3).root())
    assert len(boundary(kids[0], kids[1])[2]) == 1


def test_boundary_rejects_non_siblings():
    g = HanoiGraph(3, 3)
    kids = partition_by_largest(g.root())
    grand = partition_by_largest(kids[0])
    with pytest.raises(StructuralError):
        boundary(kids[0], grand[1])
    with pytest.raises(StructuralError):
        boundary(kids[0], kids[0])


@pytest.mark.parametrize("p", [3, 4, 5])
def test_facet_splits_into_equal_child_facets(p):
    root = HanoiGraph(p, 4).root()
    kids = partition_by_largest(root)
    for i, j in itertools.combinations(range(1, p + 1), 2):
        whole = facet(root, i, j).as_set()
        parts = [facet(k, i, j).as_set() for k in kids if k.label not in (i, j)]
        assert len(parts) == p - 2
        assert {len(s) for s in parts} == {len(whole) // (p - 2)}
        assert set().union(*parts) == whole
        assert sum(map(len, parts)) == len(whole)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 5), st.integers(2, 5), st.data())
def test_nested_sibling_boundaries_are_matchings(p, n, data):
    """Deeper sibling pairs obey the same matching size with their own depth."""
    h = HanoiGraph(p, n).root()
    depth = data.draw(st.integers(0, n - 2))
    for _ in range(depth):
        h = partition_by_largest(h)[data.draw(st.integers(0, p - 1))]
    kids = partition_by_largest(h)
    a, b = data.draw(st.sampled_from(list(itertools.combinations(kids, 2))))
    _, _, edges = boundary(a, b)
    assert len(edges) == (p - 2) ** (h.m - 1)
    assert {u for u, _ in edges} == facet(a, a.label, b.label).as_set()


@pytest.mark.parametrize("n", range(3, 9))
def test_old_framework_matching_condition_fails(n):
    p = 3
    assert (p - 2) ** (n - 1) < p ** (n - 1) * p ** (n - 1) // p**n == p ** (n - 2)
