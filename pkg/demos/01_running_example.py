"""Five small trajectories on an 8x8 grid: distances, cells, and a top-2 query."""

import numpy as np

from trajtrie import GridConfig, Point, Trajectory, build_index, hausdorff, linear_scan, query
from trajtrie.zorder import to_reference

data = [
    Trajectory(1, [(0.5, 7.5), (2.5, 7.5), (6.5, 7.5), (6.5, 4.5)]),
    Trajectory(2, [(1.5, 0.5), (2.5, 0.5), (2.5, 4.5), (4.5, 4.5)]),
    Trajectory(3, [(4.5, 0.5), (7.5, 0.5), (7.5, 2.5), (4.5, 2.5), (4.5, 1.5)]),
    Trajectory(4, [(0.5, 7.5), (2.5, 7.5), (5.5, 7.5), (5.5, 3.5)]),
    Trajectory(5, [(1.5, 0.5), (2.5, 0.5), (2.5, 5.5), (0.5, 5.5), (0.5, 2.5)]),
]
q = np.array([(0.5, 6.5), (2.5, 6.5), (4.5, 6.5)])

# %% exact Hausdorff distances
for t in data:
    print(f"t{t.id}: {hausdorff(q, t):.2f}")

# %% every point falls in a cell; the cell's z-value interleaves column and row bits
grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
for t in data:
    ref = to_reference(t, grid, "hausdorff")
    print(t.id, [format(z, "06b") for z in ref.zvals])

# %% one-partition index, top-2
index = build_index(data, "hausdorff", 1.0, n_partitions=1, n_pivots=2, groups_m=3, grid=grid)
res = query(index, q, k=2)
print("top-2:", [(t, round(d, 2)) for t, d in res.hits])
print("counters:", res.totals().as_dict())
assert res.hits == linear_scan(data, q, 2, "hausdorff").hits
