"""Exact trajectory distances and the incremental states behind the search bounds.

The ``extend_*`` functions consume one reference point (or cell) at a
time, so a trie search pays ``O(m)`` per visited node instead of
recomputing an ``m x n`` matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import GridConfig, Measure, Trajectory, cell_bounds
from .errors import InputError
from .zorder import deinterleave

__all__ = [
    "HausdorffState",
    "OrderedDPState",
    "as_points",
    "hausdorff",
    "frechet",
    "dtw",
    "distance",
    "distance_function",
    "initial_state",
    "extend_hausdorff",
    "extend_frechet",
    "extend_dtw",
]


def as_points(t) -> np.ndarray:
    if isinstance(t, Trajectory):
        return t.points
    pts = np.ascontiguousarray(t, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("expected an (n, 2) array of points")
    return pts


def _pair(t1, t2):
    a = as_points(t1)
    b = as_points(t2)
    if len(a) == 0 or len(b) == 0:
        raise InputError("distance to an empty trajectory is undefined")
    return a, b


def hausdorff(t1, t2) -> float:
    """Symmetric Hausdorff distance between two point sequences."""
    return float(_kernels.hausdorff(*_pair(t1, t2)))


def frechet(t1, t2) -> float:
    """Discrete Frechet distance."""
    return float(_kernels.frechet(*_pair(t1, t2)))


def dtw(t1, t2) -> float:
    """Dynamic time warping distance with Euclidean ground cost (sum, not mean)."""
    return float(_kernels.dtw(*_pair(t1, t2)))


_RAW = {
    Measure.HAUSDORFF: _kernels.hausdorff,
    Measure.FRECHET: _kernels.frechet,
    Measure.DTW: _kernels.dtw,
}


def distance_function(measure):
    """Compiled ``f(a, b)`` on raw point arrays; no argument checking."""
    return _RAW[Measure.parse(measure)]


def distance(t1, t2, measure) -> float:
    return float(distance_function(measure)(*_pair(t1, t2)))


@dataclass(frozen=True, slots=True)
class HausdorffState:
    """Row minima ``r`` and the largest column minimum seen so far."""

    r: np.ndarray
    c_max: float = 0.0
    length: int = 0

    @classmethod
    def start(cls, m: int) -> "HausdorffState":
        return cls(np.full(m, np.inf), 0.0, 0)

    @property
    def full(self) -> float:
        """Hausdorff distance between the query and the points folded in so far."""
        if self.length == 0:
            return math.inf
        return max(float(self.r.max()), self.c_max)


@dataclass(frozen=True, slots=True)
class OrderedDPState:
    """Last column of the Frechet or DTW matrix against a reference prefix."""

    col: np.ndarray
    c_min: float = 0.0
    last_len: int = 0

    @classmethod
    def start(cls) -> "OrderedDPState":
        return cls(np.empty(0), 0.0, 0)

    @property
    def full(self) -> float:
        """Matrix corner ``f[m, n]``: the distance to the whole prefix."""
        if self.last_len == 0:
            return math.inf
        return float(self.col[-1])


def initial_state(measure, m: int):
    measure = Measure.parse(measure)
    if measure is Measure.HAUSDORFF:
        return HausdorffState.start(m)
    return OrderedDPState.start()


def _step_hausdorff(q, px, py, state, slack):
    r, c, rmax = _kernels.hausdorff_column(q, px, py, state.r)
    c_max = max(state.c_max, c)
    return max(c_max - slack, 0.0), max(rmax, c_max), HausdorffState(r, c_max, state.length + 1)


def _step_frechet(q, px, py, state, slack):
    col = _kernels.frechet_column(q, px, py, state.col)
    c_min = _kernels.column_min(col)
    return max(c_min - slack, 0.0), col[-1], OrderedDPState(col, c_min, state.last_len + 1)


def _step_dtw(q, x0, y0, x1, y1, state):
    col = _kernels.dtw_column(q, x0, y0, x1, y1, state.col)
    c_min = _kernels.column_min(col)
    return c_min, col[-1], OrderedDPState(col, c_min, state.last_len + 1)


def extend_hausdorff(state: HausdorffState, query, p, slack: float):
    """Append reference point ``p``.

    Returns ``(lb_one_side, hausdorff_to_prefix, new_state)``.  The second
    value minus a leaf's ``d_max`` is the two-side bound.
    """
    lb, full, new = _step_hausdorff(as_points(query), float(p[0]), float(p[1]), state, slack)
    return lb, float(full), new


def extend_frechet(state: OrderedDPState, query, p, slack: float):
    """Append reference point ``p``; returns ``(lb_one_side, f_mn, new_state)``."""
    lb, full, new = _step_frechet(as_points(query), float(p[0]), float(p[1]), state, slack)
    return lb, float(full), new


def extend_dtw(state: OrderedDPState, query, z: int, grid: GridConfig):
    """Append cell ``z``; ground cost is the point-to-cell distance.

    Returns ``(lb_one_side, f_mn, new_state)``; no slack is subtracted.
    """
    if not 0 <= z < grid.n_cells:
        raise IndexError(f"cell {z} out of range")
    x0, y0, x1, y1 = cell_bounds(*deinterleave(z, grid.bits), grid)
    lb, full, new = _step_dtw(as_points(query), x0, y0, x1, y1, state)
    return float(lb), float(full), new
