import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hanoiflow.builder import (
    audit_uniform_mcf,
    build_uniform_mcf,
    recurrence_ledger,
    solve_concentration,
    solve_distribution,
    solve_routing,
    solve_shuffle,
    solve_transmission,
    stage_problems,
    unit_distribution,
    unit_routing,
)
from hanoiflow.hanoi import (
    BudgetExceededError,
    HanoiGraph,
    StructuralError,
    SubgraphHandle,
    facet,
    facet_local,
    partition_by_largest,
)
from hanoiflow.msf import ArcFlow, MsfProblem, validate_msf

# Congestion of the construction, fixed after the exact per-commodity audit passed.
RHO = {
    (3, 1): Fraction(1, 3),
    (3, 2): Fraction(1),
    (3, 3): Fraction(3),
    (3, 4): Fraction(9),
    (3, 5): Fraction(27),
    (4, 1): Fraction(1, 4),
    (4, 2): Fraction(1, 2),
    (4, 3): Fraction(11, 8),
    (4, 4): Fraction(11, 4),
    (4, 5): Fraction(45, 8),
    (5, 1): Fraction(1, 5),
}


def children(p, n):
    return partition_by_largest(HanoiGraph(p, n).root())


@pytest.mark.parametrize("pn, rho", sorted(RHO.items()))
def test_congestion_regression(pn, rho):
    p, n = pn
    exact = build_uniform_mcf(p, n, exact=True)
    assert exact.rho == rho
    assert build_uniform_mcf(p, n).rho == pytest.approx(float(rho), rel=1e-12)


@pytest.mark.parametrize("n", range(2, 9))
def test_three_peg_congestion_closed_form(n):
    assert build_uniform_mcf(3, n, exact=True).rho == 3 ** (n - 2)


@pytest.mark.parametrize("p", [3, 4, 5, 6])
def test_single_disc_is_direct_clique_routing(p):
    mcf = build_uniform_mcf(p, 1, exact=True)
    legal = mcf.aggregate.heads >= 0
    assert np.all(mcf.aggregate.values[legal] == 1)
    assert mcf.rho == Fraction(1, p)


@pytest.mark.parametrize("p, n", [(3, 1), (3, 2), (4, 1), (4, 2), (5, 1), (5, 2), (6, 2), (4, 3)])
def test_per_commodity_audit(p, n):
    mcf = build_uniform_mcf(p, n, mode="per-commodity", exact=True)
    audit = audit_uniform_mcf(mcf)
    assert audit.ok, audit.failures
    assert len(mcf.per_source) == p**n


def test_audit_catches_a_corrupted_flow():
    mcf = build_uniform_mcf(3, 2, mode="per-commodity", exact=True)
    mcf.per_source[4].values[4, 0, 1] += 1  # vertex 4 has a legal (0 -> 1) move
    assert not audit_uniform_mcf(mcf).ok


def test_float_per_commodity_audit():
    mcf = build_uniform_mcf(4, 2, mode="per-commodity")
    assert audit_uniform_mcf(mcf).ok


def test_builder_guards():
    with pytest.raises(BudgetExceededError):
        build_uniform_mcf(3, 5, mode="per-commodity")
    build_uniform_mcf(3, 5, mode="per-commodity", vertex_budget=243)
    with pytest.raises(ValueError):
        build_uniform_mcf(2, 3)
    with pytest.raises(ValueError):
        build_uniform_mcf(3, 2, mode="nope")
    with pytest.raises(ValueError):
        audit_uniform_mcf(build_uniform_mcf(3, 2))


# -- transmission ---------------------------------------------------------------


def test_transmission_h33_carries_all_of_a_child():
    h1, h2, _ = children(3, 3)
    f = solve_transmission(h1, h2, 9, exact=True)
    (arc, amount), = list(f.nonzero_arcs())
    assert amount == 9
    assert 9 * amount == h1.size * h2.size == 81
    level = build_uniform_mcf(3, 3, exact=True).ledger.levels[-1]
    assert level.transmission * 27 == 81


def test_transmission_h43_per_edge_amount():
    kids = children(4, 3)
    sigma = Fraction(16, 4)
    for a, b in itertools.permutations(kids, 2):
        f = solve_transmission(a, b, sigma, exact=True)
        arcs = list(f.nonzero_arcs())
        assert len(arcs) == 4 and all(x == 4 for _, x in arcs)
        problem = MsfProblem.uniform(
            facet(a, a.label, b.label).vertices, facet(b, a.label, b.label).vertices, 4, 4
        )
        assert validate_msf(f, problem) == []


def test_transmission_zero_and_guards():
    h1, h2, _ = children(3, 2)
    assert solve_transmission(h1, h2, 0).support_size() == 0
    with pytest.raises(StructuralError):
        solve_transmission(h1, h1, 1)
    with pytest.raises(ValueError):
        solve_transmission(h1, h2, -1)


@pytest.mark.parametrize("p", [3, 4, 5])
def test_transmission_term_matches_closed_form(p):
    for t in build_uniform_mcf(p, 5, exact=True).ledger.levels:
        m = t.level
        side = p ** (m - 1)
        assert t.transmission == Fraction(side * side, (p - 2) ** (m - 1) * p**m)


# -- distribution, concentration, routing ---------------------------------------


@pytest.mark.parametrize("p, n", [(3, 2), (3, 4), (4, 2), (4, 3), (5, 3)])
def test_distribution_solves_its_problem_within_sigma(p, n):
    for a, b in itertools.permutations(range(1, p + 1), 2):
        probs = stage_problems(p, n, children(p, n)[a - 1].offset, b)
        h2 = children(p, n)[b - 1]
        sigma = Fraction(p ** (n - 1), (p - 2) ** (n - 1))
        f = solve_distribution(h2, facet(h2, a, b), sigma, exact=True)
        assert validate_msf(f, probs["distribution"]) == []
        peak, _ = f.max_load()
        assert peak <= sigma


@pytest.mark.parametrize("p, n", [(3, 3), (4, 3), (5, 2)])
def test_concentration_is_reversed_distribution(p, n):
    h = children(p, n)[0]
    fc = solve_concentration(h, facet(h, 1, 2), 1, exact=True)
    fd = solve_distribution(h, facet(h, 1, 2), 1, exact=True)
    assert fc == fd.reversed()
    sinks = facet(h, 1, 2).vertices
    problem = MsfProblem.uniform(h.vertices(), sinks, Fraction(len(sinks), h.size), 1)
    assert validate_msf(fc, problem) == []


@pytest.mark.parametrize("p", [3, 4, 5])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_distribution_load_term(p, n):
    """Distribution alone, summed over one child's sources, stays below
    |V(H_1)| sigma / |V| = (p/(p-2))^(n-1) / p."""
    h1, h2 = children(p, n)[:2]
    sigma = Fraction(p ** (n - 1), (p - 2) ** (n - 1))
    bound = h1.size * sigma / p**n
    assert bound == Fraction(p, p - 2) ** (n - 1) / p
    if p != 3:
        assert bound != Fraction(p, p - 2) ** (n - 2)
    f = solve_distribution(h2, facet(h2, 1, 2), sigma, exact=True)
    assert h1.size * f.max_load()[0] / p**n <= bound


def test_distribution_base_case_keeps_and_sends():
    """One disc: the facet vertex keeps (p-2)/p and sends 1/p to each excluded peg."""
    for p in (3, 4, 5):
        F = unit_distribution(p, 1, (0, 1), True)
        for k in range(2, p):
            assert F[k, k, 0] == F[k, k, 1] == Fraction(1, p)
        assert sum(F.reshape(-1)) == 2 * Fraction(p - 2, p)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 3), st.data())
def test_unit_distribution_property(p, m, data):
    x, y = sorted(data.draw(st.lists(st.integers(0, p - 1), min_size=2, max_size=2, unique=True)))
    F = ArcFlow(p, m, np.array(unit_distribution(p, m, (x, y), True)), True)
    share = Fraction(p - 2, p) ** m
    src = facet_local(p, m, x, y).tolist()
    problem = MsfProblem({v: 1 for v in src}, {v: share for v in range(p**m)})
    assert validate_msf(F, problem) == []
    assert F.max_load()[0] <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(1, 3), st.data())
def test_unit_routing_property(p, m, data):
    pegs = st.lists(st.integers(0, p - 1), min_size=2, max_size=2, unique=True)
    src = tuple(sorted(data.draw(pegs)))
    dst = tuple(sorted(data.draw(pegs)))
    F = ArcFlow(p, m, np.array(unit_routing(p, m, src, dst, True)), True)
    problem = MsfProblem(
        {v: 1 for v in facet_local(p, m, *src).tolist()},
        {v: 1 for v in facet_local(p, m, *dst).tolist()},
    )
    assert validate_msf(F, problem) == []
    assert F.max_load()[0] <= 1


def test_routing_between_facets():
    h = children(4, 3)[0]
    f = solve_routing(h, facet(h, 1, 2), facet(h, 3, 4), 5, exact=True)
    problem = MsfProblem.uniform(facet(h, 1, 2).vertices, facet(h, 3, 4).vertices, 5, 5)
    assert validate_msf(f, problem) == []
    assert f.max_load()[0] <= 5
    assert solve_routing(h, facet(h, 1, 2), facet(h, 1, 2), 5).support_size() == 0


def test_routing_rejects_foreign_facet():
    a, b = children(3, 2)[:2]
    with pytest.raises(StructuralError):
        solve_routing(a, facet(b, 1, 2), facet(a, 1, 2), 1)


# -- shuffle and stage chain ----------------------------------------------------


def test_shuffle_on_single_vertex_is_empty():
    h = SubgraphHandle(3, 1, (2,))
    assert solve_shuffle(h.offset, h, None).support_size() == 0


def test_shuffle_reuses_recursive_flow():
    sub = build_uniform_mcf(3, 1, mode="per-commodity", exact=True)
    h = children(3, 2)[2]
    f = solve_shuffle(7, h, sub)
    problem = MsfProblem({7: 3}, {v: 1 for v in h.vertices()})
    assert validate_msf(f, problem) == []
    assert f.support_size() == 2
    with pytest.raises(StructuralError):
        solve_shuffle(0, h, sub)
    with pytest.raises(ValueError):
        solve_shuffle(7, h, build_uniform_mcf(3, 2, mode="per-commodity"))


def test_stage_problems_chain_into_pi_s():
    probs = stage_problems(3, 3, 0, 2)
    assert probs["composite"].sources == {0: 9}
    assert set(probs["composite"].sinks) == set(range(9, 18))
    assert probs["transmission"].sources == {8: 9}
    with pytest.raises(ValueError):
        stage_problems(3, 3, 0, 1)


# -- ledger ----------------------------------------------------------------------


@pytest.mark.parametrize("p", [3, 4, 5])
def test_ledger_structure(p):
    ledger = recurrence_ledger(p, 6, exact=True)
    levels = ledger.levels
    assert [t.level for t in levels] == list(range(1, 7))
    assert levels[0].shuffle == 0 and levels[0].increment == levels[0].rho
    for prev, t in zip(levels, levels[1:]):
        assert t.shuffle == prev.rho
        assert t.increment == t.rho - prev.rho >= 0
        assert t.rho <= t.shuffle + t.transmission + t.concentration_distribution
    assert ledger.bound_holds()
    assert ledger.constant <= ledger.analytic_constant
    assert ledger.analytic_constant == Fraction(2 * (p - 1) * (p - 2), p * p)


def test_three_peg_increments_are_geometric():
    levels = recurrence_ledger(3, 8, exact=True).levels
    for t in levels[1:]:
        assert t.increment / Fraction(3) ** t.level == Fraction(2, 27)


def test_json_record_is_deterministic():
    a = build_uniform_mcf(4, 3, exact=True).to_json(witness_upper_bound=Fraction(3, 4))
    b = build_uniform_mcf(4, 3, exact=True).to_json(witness_upper_bound=Fraction(3, 4))
    assert a == b
    assert '"rho": "11/8"' in a and '"witness_upper_bound": "3/4"' in a
