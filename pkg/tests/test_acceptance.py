"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

from fractions import Fraction

import pytest

from hanoiflow import acceptance as acc


@pytest.fixture
def report(capsys):
    def emit(result):
        with capsys.disabled():
            print("\n" + result.line())
        return result

    return emit


def test_1_structure(report):
    r = report(acc.criterion_structure())
    assert r.passed, r.detail
    assert r.seconds < 10


def test_2_flow_validity(report):
    r = report(acc.criterion_flow_validity())
    assert r.passed, r.detail
    assert r.data["timings"][(3, 3)] < 60


def test_3_congestion_recurrence(report):
    r = report(acc.criterion_recurrence())
    assert r.passed, r.detail
    assert r.data["constants"] == {3: Fraction(2, 27), 4: Fraction(7, 64)}


def test_4_expansion_sandwich(report):
    r = report(acc.criterion_sandwich())
    assert r.passed, r.detail
    exact = {(row["p"], row["n"]): row["exact_h"] for row in r.data["rows"]}
    assert exact == {
        (3, 1): 2,
        (3, 2): Fraction(2, 3),
        (3, 3): Fraction(2, 9),
        (4, 1): 2,
        (4, 2): 1,
    }


def test_5_asymptotic_trend(report):
    r = report(acc.criterion_trend())
    assert r.passed, r.detail
    assert r.data["exact_band"] == (6, 6)
    assert r.data["flow_bands"][3] == (Fraction(9, 2), Fraction(9, 2))
    assert r.data["flow_bands"][4] == (Fraction(128, 45), 4)


def test_6_inequality_chain(report):
    r = report(acc.criterion_relations())
    assert r.passed, r.detail


def test_7_oracle_soundness(report):
    r = report(acc.criterion_oracle_soundness(seed=0))
    assert r.passed, r.detail


def test_8_framework_failure(report):
    r = report(acc.criterion_framework_failure())
    assert r.passed, r.detail


if __name__ == "__main__":
    results = [c() for c in acc.ALL_CRITERIA]
    for r in results:
        print(r.line())
    raise SystemExit(0 if all(r.passed for r in results) else 1)
