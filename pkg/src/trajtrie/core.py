"""Geometric primitives: points, trajectories, the indexing grid, measures."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, InputError

__all__ = [
    "Point",
    "Trajectory",
    "GridConfig",
    "Measure",
    "build_grid",
    "euclid",
    "min_dist_point_cell",
]


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A trajectory: integer id plus an ``(n, 2)`` float64 array of points."""

    id: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"trajectory {self.id}: points must have shape (n, 2)")
        if len(pts) == 0:
            raise InputError(f"trajectory {self.id}: no points")
        if not np.isfinite(pts).all():
            raise InputError(f"trajectory {self.id}: non-finite coordinate")
        if self.id < 0:
            raise InputError(f"trajectory id must be non-negative, got {self.id}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.id, len(self.points)))


class Measure(str, enum.Enum):
    HAUSDORFF = "hausdorff"
    FRECHET = "frechet"
    DTW = "dtw"

    @property
    def is_metric(self) -> bool:
        """Whether the triangle inequality holds (pivot pruning allowed)."""
        return self is not Measure.DTW

    @property
    def order_sensitive(self) -> bool:
        return self is not Measure.HAUSDORFF

    @classmethod
    def parse(cls, value) -> "Measure":
        if isinstance(value, Measure):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown measure {value!r}") from None


@dataclass(frozen=True)
class GridConfig:
    """Square region of side ``side_u`` split into ``level_l`` x ``level_l`` cells.

    ``slack`` is the cell half-diagonal, the distance any sample point can
    be from the center of the cell containing it.
    """

    origin: Point
    side_u: float
    level_l: int

    def __post_init__(self):
        l = self.level_l
        if l < 1 or l & (l - 1):
            raise ConfigurationError(f"level_l must be a power of two, got {l}")
        if not (self.side_u > 0 and math.isfinite(self.side_u)):
            raise ConfigurationError(f"side_u must be positive, got {self.side_u}")
        object.__setattr__(self, "origin", Point(float(self.origin[0]), float(self.origin[1])))

    @property
    def bits(self) -> int:
        """Bits per axis, ``p`` with ``level_l == 2**p``."""
        return self.level_l.bit_length() - 1

    @property
    def cell_size(self) -> float:
        return self.side_u / self.level_l

    @property
    def slack(self) -> float:
        return math.sqrt(2.0) * self.cell_size / 2.0

    @property
    def n_cells(self) -> int:
        return self.level_l * self.level_l

    @property
    def terminator(self) -> int:
        """Label one past the last valid z-value; marks end-of-reference."""
        return self.n_cells


def build_grid(bbox, requested_delta: float, padding: float = 1e-3) -> GridConfig:
    """Derive the indexing grid for a dataset bounding box.

    Parameters
    ----------
    bbox : sequence of float
        ``(xmin, ymin, xmax, ymax)``.
    requested_delta : float
        Upper bound on the cell side length.
    padding : float, optional
        Fraction of the longer side added on each side of the region.

    Returns
    -------
    GridConfig
        ``level_l`` is the smallest power of two with
        ``side_u / level_l <= requested_delta``.
    """
    if not (requested_delta > 0 and math.isfinite(requested_delta)):
        raise ConfigurationError(f"requested_delta must be positive, got {requested_delta}")
    xmin, ymin, xmax, ymax = (float(v) for v in bbox)
    if not all(math.isfinite(v) for v in (xmin, ymin, xmax, ymax)):
        raise InputError("bounding box is not finite")
    if xmax < xmin or ymax < ymin:
        raise InputError("bounding box has negative extent")
    if xmax == xmin:
        xmin, xmax = xmin - requested_delta / 2, xmax + requested_delta / 2
    if ymax == ymin:
        ymin, ymax = ymin - requested_delta / 2, ymax + requested_delta / 2
    span = max(xmax - xmin, ymax - ymin)
    pad = span * padding
    side_u = span + 2 * pad
    ratio = side_u / requested_delta
    level = 1
    # tolerate representation error when side_u / delta is already a power of two
    while level < ratio * (1 - 1e-12):
        level *= 2
    return GridConfig(Point(xmin - pad, ymin - pad), side_u, level)


def euclid(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def cell_bounds(col: int, row: int, grid: GridConfig):
    d = grid.cell_size
    x0 = grid.origin.x + col * d
    y0 = grid.origin.y + row * d
    return x0, y0, x0 + d, y0 + d


def min_dist_point_cell(q, z: int, grid: GridConfig) -> float:
    """Distance from ``q`` to the closest point of cell ``z`` (0 inside)."""
    from .zorder import deinterleave

    if not 0 <= z < grid.n_cells:
        raise IndexError(f"cell {z} out of range for a {grid.level_l}x{grid.level_l} grid")
    col, row = deinterleave(z, grid.bits)
    x0, y0, x1, y1 = cell_bounds(col, row, grid)
    dx = max(x0 - q[0], 0.0, q[0] - x1)
    dy = max(y0 - q[1], 0.0, q[1] - y1)
    return math.hypot(dx, dy)
