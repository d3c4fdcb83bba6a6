"""
Exact expansion and treewidth on small graphs
=============================================

Compute exact edge expansion, vertex expansion and treewidth, then check
that they fit the chain h_v <= h <= D h_v <= 3 D (t + 1) / |V|.
"""

from hanoiflow import (
    HanoiGraph,
    build_uniform_mcf,
    check_relations,
    exact_edge_expansion,
    exact_treewidth,
    exact_vertex_expansion,
)

for p, n in [(3, 1), (3, 2), (4, 1), (4, 2)]:
    g = HanoiGraph(p, n)
    h, cut = exact_edge_expansion(g)
    h_v, _ = exact_vertex_expansion(g)
    t = exact_treewidth(g).width
    print(f"H_{p}^{n}: h={h} via {cut.vertices}, h_v={h_v}, t={t}")
    print("  violated:", check_relations(h, h_v, g.max_degree, t, g.vertex_count) or "none")

# On 27 vertices pruning keeps the search tiny; the child block is optimal.
h, cut = exact_edge_expansion(HanoiGraph(3, 3))
print(f"h(H_3^3) = {h}, flow bound {build_uniform_mcf(3, 3, exact=True).lower_bound}")
print(f"tw(H_3^3) = {exact_treewidth(HanoiGraph(3, 3), budget=27).width}")
