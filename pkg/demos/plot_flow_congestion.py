"""
Congestion of the recursive uniform flow
========================================

Route one unit between every ordered pair of states and watch the
congestion grow level by level. Its reciprocal bounds edge expansion.
"""

from fractions import Fraction

from hanoiflow import audit_uniform_mcf, build_uniform_mcf, witness_cut_bound

# Exact arithmetic keeps every conservation check an equality.
mcf = build_uniform_mcf(4, 2, mode="per-commodity", exact=True)
audit = audit_uniform_mcf(mcf)
print(f"H_4^2: {audit.checked} checks, ok={audit.ok}, rho={mcf.rho}")

# The ledger splits each level into reused, transmitted and spread load.
for p in (3, 4):
    ledger = build_uniform_mcf(p, 6, exact=True).ledger
    ratio = Fraction(p, p - 2)
    print(f"p={p}")
    for t in ledger.levels:
        print(f"  m={t.level} rho={t.rho} increment={t.increment} "
              f"increment/ratio^m={t.increment / ratio**t.level}")
    print(f"  fitted constant {ledger.constant} vs per-arc bound {ledger.analytic_constant}")

# Lower bound from the flow against the cut around one child.
for n in range(1, 8):
    mcf = build_uniform_mcf(4, n, exact=True)
    print(f"n={n}: {float(mcf.lower_bound):.4f} <= h <= {float(witness_cut_bound(4, n)):.4f}")
