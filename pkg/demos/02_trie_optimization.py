"""Greedy reordering of Hausdorff cell sets shrinks the trie."""

import numpy as np

from trajtrie import build_grid, generate_clustered
from trajtrie.core import GridConfig, Point
from trajtrie.rp_trie import GreedyStats, build_optimized_trie, build_trie
from trajtrie.zorder import to_reference

# %% the eight-set collection over six cells
sets = {
    1: {1, 3}, 2: {1, 3, 5}, 3: {2, 3}, 4: {2, 3, 5},
    5: {3, 5}, 6: {1, 4}, 7: {2, 4}, 8: {5, 6},
}
stats = GreedyStats()
trie = build_optimized_trie(sets.items(), GridConfig(Point(0, 0), 4.0, 4), stats)
print("root frequencies:", stats.root_counts)
print("first-level labels:", [format(z, "04b") for z in sorted(trie.root.children)])

# %% ascending-order insertion vs greedy on a clustered workload
data = generate_clustered(clusters=50, per_cluster=100, seed=1)
pts = np.concatenate([t.points for t in data])
grid = build_grid((*pts.min(axis=0), *pts.max(axis=0)), 1.0)
refs = [to_reference(t, grid, "hausdorff") for t in data]
plain = build_trie(refs, "hausdorff", grid).node_count()
greedy = build_optimized_trie(refs, grid).node_count()
print(f"plain {plain} nodes, greedy {greedy} nodes ({1 - greedy / plain:.1%} fewer)")
