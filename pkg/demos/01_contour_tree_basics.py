"""
Contour trees on a tiny terrain
===============================

Build the join and split trees of a small elevation grid, pair its
critical points by persistence, and watch simplification erase the
shallow features.
"""

import numpy as np

from topoflood.topology import (
    FieldOrder,
    build_merge_tree,
    combine_trees,
    compute_persistence,
    segment_field,
    simplify_tree,
)

# two pits separated by a low pass, one deep pit, one shallow
f = np.array(
    [
        [0.9, 0.8, 0.9, 1.0, 0.9],
        [0.7, 0.1, 0.5, 0.6, 0.8],
        [0.8, 0.4, 0.3, 0.2, 0.7],
        [0.9, 0.7, 0.35, 0.25, 0.6],
        [1.0, 0.9, 0.8, 0.7, 0.9],
    ]
)

order = FieldOrder(f)
join = build_merge_tree(order, "join")
split = build_merge_tree(order, "split")

print("join events (saddle vertex, elder components):")
for saddle, elders in join.merge_events:
    print(f"  vertex {saddle} merges {elders}")

pairs = compute_persistence(join, split)
print("\npersistence pairs:")
for p in pairs:
    print(f"  {p.side:10s} birth {p.birth_vertex:2d} death {p.death_vertex} pers {p.persistence:.3f}")

contour = combine_trees(join, split)
print(f"\ncontour tree: {len(contour.node_vertices)} nodes, {contour.arc_count} arcs")

# the shallow pit disappears below its persistence, the deep one stays
for eps in (0.0, 0.1, 0.5):
    simplified = simplify_tree(contour, pairs, eps)
    seg = segment_field(simplified)
    print(f"eps {eps:4.2f}: {len(simplified.node_vertices)} nodes, {seg.segment_count} segments")
