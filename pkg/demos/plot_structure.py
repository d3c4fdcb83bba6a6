"""
Hanoi graphs and their boundary matchings
=========================================

Build a few Hanoi graphs, split them by the position of the largest disc,
and look at how thin the connection between two pieces is.
"""

from hanoiflow import HanoiGraph, boundary, facet, partition_by_largest

# Vertices are puzzle states; the index codec puts disc 1 in the lowest digit.
g = HanoiGraph(3, 2)
for k in g.vertices():
    print(k, g.config(k), g.neighbor_indices(k))

# Pinning the largest disc yields p copies of the one-disc-smaller graph.
for p, n in [(3, 4), (4, 4), (5, 3)]:
    root = HanoiGraph(p, n).root()
    h1, h2 = partition_by_largest(root)[:2]
    _, _, edges = boundary(h1, h2)
    print(f"H_{p}^{n}: children of {h1.size} vertices joined by {len(edges)} edges")

# The endpoints of those edges are exactly the states avoiding both pegs.
h1, h2 = partition_by_largest(HanoiGraph(4, 3).root())[:2]
side, _, _ = boundary(h1, h2)
print(sorted(side) == sorted(facet(h1, 1, 2).vertices.tolist()))
