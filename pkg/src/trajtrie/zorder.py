"""Z-order (Morton) encoding of grid cells and reference trajectories.

Within each bit pair of a z-value the column (horizontal) bit comes
first, and pairs run from most to least significant.  Column ``010`` and
row ``101`` therefore give ``011001``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GridConfig, Measure, Point, Trajectory

__all__ = [
    "ReferenceTrajectory",
    "interleave",
    "deinterleave",
    "cell_of",
    "cells_of",
    "reference_point",
    "reference_points",
    "to_reference",
    "coarsen",
]


def _spread(v, p):
    out = v & 0
    for b in range(p):
        out |= ((v >> b) & 1) << (2 * b)
    return out


def _compact(z, p):
    out = z & 0
    for b in range(p):
        out |= ((z >> (2 * b)) & 1) << b
    return out


def interleave(col, row, p: int):
    """Combine ``p``-bit column and row indices into a z-value.

    Works on Python ints and on integer numpy arrays.
    """
    if isinstance(col, np.ndarray) or isinstance(row, np.ndarray):
        col = np.asarray(col, dtype=np.int64)
        row = np.asarray(row, dtype=np.int64)
    return (_spread(col, p) << 1) | _spread(row, p)


def deinterleave(z, p: int):
    """Inverse of :func:`interleave`; returns ``(col, row)``."""
    if isinstance(z, np.ndarray):
        z = z.astype(np.int64)
    return _compact(z >> 1, p), _compact(z, p)


def cells_of(points: np.ndarray, grid: GridConfig) -> np.ndarray:
    """Z-values of the cells containing each row of an ``(n, 2)`` array.

    Points outside the region are clamped onto the border cells.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    d = grid.cell_size
    top = grid.level_l - 1
    col = np.clip(np.floor((pts[:, 0] - grid.origin.x) / d), 0, top).astype(np.int64)
    row = np.clip(np.floor((pts[:, 1] - grid.origin.y) / d), 0, top).astype(np.int64)
    return interleave(col, row, grid.bits)


def cell_of(point, grid: GridConfig) -> int:
    return int(cells_of(np.asarray([point[0], point[1]]), grid)[0])


def reference_points(zvals, grid: GridConfig) -> np.ndarray:
    """Cell centers for an array of z-values, as an ``(n, 2)`` array."""
    z = np.asarray(zvals, dtype=np.int64).reshape(-1)
    if len(z) and (z.min() < 0 or z.max() >= grid.n_cells):
        raise IndexError("z-value out of range for grid")
    col, row = deinterleave(z, grid.bits)
    d = grid.cell_size
    out = np.empty((len(z), 2))
    out[:, 0] = grid.origin.x + (col + 0.5) * d
    out[:, 1] = grid.origin.y + (row + 0.5) * d
    return out


def reference_point(z: int, grid: GridConfig) -> Point:
    x, y = reference_points([z], grid)[0]
    return Point(float(x), float(y))


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """A trajectory snapped to cell centers.

    For order-sensitive measures ``zvals`` has one entry per sample point
    (repeats kept).  For Hausdorff it is the sorted set of distinct cells.
    """

    source_id: int
    zvals: tuple
    ref_points: np.ndarray = field(repr=False)
    is_set: bool = False

    def __len__(self):
        return len(self.zvals)


def to_reference(traj: Trajectory, grid: GridConfig, measure) -> ReferenceTrajectory:
    measure = Measure.parse(measure)
    z = cells_of(traj.points, grid)
    as_set = not measure.order_sensitive
    if as_set:
        z = np.unique(z)
    pts = reference_points(z, grid)
    pts.setflags(write=False)
    return ReferenceTrajectory(traj.id, tuple(int(v) for v in z), pts, as_set)


def coarsen(z, levels: int):
    """Z-value of the enclosing cell ``levels`` grid levels up."""
    return z >> (2 * levels)
