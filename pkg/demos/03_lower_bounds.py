"""How the one-side bound grows as a trie path is extended, per measure."""

import numpy as np

from trajtrie import distance
from trajtrie.core import GridConfig, Point
from trajtrie.distances import extend_dtw, extend_frechet, extend_hausdorff, initial_state
from trajtrie.zorder import cells_of, reference_points

grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
rng = np.random.default_rng(3)
q = rng.uniform(0, 8, (6, 2))
t = np.cumsum(rng.normal(0, 0.8, (8, 2)), axis=0) + 4

# %% extend the reference one cell at a time
for measure in ("hausdorff", "frechet", "dtw"):
    cells = [int(z) for z in cells_of(t, grid)]
    if measure == "hausdorff":
        cells = sorted(set(cells))
    pts = reference_points(np.array(cells), grid)
    state = initial_state(measure, len(q))
    bounds = []
    for z, p in zip(cells, pts):
        if measure == "hausdorff":
            lb, full, state = extend_hausdorff(state, q, p, grid.slack)
        elif measure == "frechet":
            lb, full, state = extend_frechet(state, q, p, grid.slack)
        else:
            lb, full, state = extend_dtw(state, q, z, grid)
        bounds.append(round(lb, 3))
    print(f"{measure:9s} bounds {bounds}  exact {distance(q, t, measure):.3f}")
