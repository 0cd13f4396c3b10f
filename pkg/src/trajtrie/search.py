"""Exact best-first top-k search over one annotated trie.

Nodes leave the priority queue in ascending order of their lower bound.
A child's key is the largest of its one-side bound, its pivot bound
(metrics only) and, for leaves, the two-side bound; none of these can
shrink from parent to child, so the first popped key above the current
k-th distance ends the search.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import Measure
from .distances import (
    HausdorffState,
    OrderedDPState,
    _step_dtw,
    _step_frechet,
    _step_hausdorff,
    as_points,
    distance_function,
    extend_hausdorff,
)
from .errors import ConfigurationError, InputError
from .rp_trie import RPTrie, TrieNode

__all__ = [
    "ResultHeap",
    "SearchStats",
    "SearchAudit",
    "comp_lb",
    "pivot_lb",
    "query_pivot_distances",
    "top_k_search",
]

# Bounds and exact distances come from different float paths; a bound may
# overshoot a tied distance by a few ulps, so pruning needs a margin.
_REL_TOL = 1e-9


def _exceeds(key: float, d_k: float) -> bool:
    return key > d_k + _REL_TOL * (1.0 + d_k)


class ResultHeap:
    """The best ``k`` (distance, id) pairs seen so far; ties go to the smaller id."""

    def __init__(self, k: int):
        if k < 1:
            raise InputError(f"k must be at least 1, got {k}")
        self.k = k
        self._heap: list[tuple[float, int]] = []  # (-dist, -id): worst on top

    def __len__(self):
        return len(self._heap)

    @property
    def d_k(self) -> float:
        if len(self._heap) < self.k:
            return math.inf
        return -self._heap[0][0]

    def push(self, dist: float, tid: int) -> bool:
        item = (-dist, -tid)
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, item)
            return True
        if item > self._heap[0]:
            heapq.heapreplace(self._heap, item)
            return True
        return False

    def results(self) -> list[tuple[int, float]]:
        return [(-t, -d) for d, t in sorted(self._heap, reverse=True)]


@dataclass
class SearchStats:
    visited: int = 0
    pruned: int = 0
    exact: int = 0

    def __iadd__(self, other):
        self.visited += other.visited
        self.pruned += other.pruned
        self.exact += other.exact
        return self

    def as_dict(self):
        return {"visited": self.visited, "pruned": self.pruned, "exact": self.exact}


@dataclass
class SearchAudit:
    """Optional trace of a search, for checking the bounds after the fact.

    ``pruned`` holds ``(bound, node)`` for every subtree skipped;
    ``evaluated`` holds ``(lb_o, lb_t, lb_p, tid, distance)`` for every
    exact distance computed; ``popped`` holds the keys in pop order.
    """

    pruned: list = field(default_factory=list)
    evaluated: list = field(default_factory=list)
    popped: list = field(default_factory=list)


def comp_lb(query, p, state: HausdorffState, slack: float):
    """One incremental Hausdorff step; see :func:`extend_hausdorff`."""
    return extend_hausdorff(state, query, p, slack)


def pivot_lb(d_qp, hr, slack: float, measure=Measure.HAUSDORFF) -> float:
    """Triangle-inequality bound from the query's pivot distances and a node's ranges."""
    if not Measure.parse(measure).is_metric:
        raise ConfigurationError("pivot bounds need a metric measure")
    d_qp = np.asarray(d_qp, dtype=np.float64)
    hr = np.asarray(hr, dtype=np.float64).reshape(len(d_qp), 2)
    return float(_kernels.pivot_bound(d_qp, hr, float(slack)))


def query_pivot_distances(query, pivots, measure) -> np.ndarray:
    dist = distance_function(measure)
    q = as_points(query)
    return np.array([dist(q, p.points) for p in pivots], dtype=np.float64)


def top_k_search(
    trie: RPTrie,
    query,
    k: int,
    trajectories,
    d_qp=None,
    stats: SearchStats | None = None,
    audit: SearchAudit | None = None,
) -> list[tuple[int, float]]:
    """Top-k most similar trajectories in one trie.

    Parameters
    ----------
    trie : RPTrie
        Annotated trie (``annotate`` has run).
    query : Trajectory or array_like
    k : int
    trajectories : mapping
        Trajectory id to :class:`Trajectory` for every id in the trie.
    d_qp : array_like, optional
        Query-to-pivot distances; computed here if the trie has pivots and
        none are given.

    Returns
    -------
    list of (id, distance)
        Ascending by distance, then id.
    """
    if k < 1:
        raise InputError(f"k must be at least 1, got {k}")
    q = as_points(query)
    if len(q) == 0:
        raise InputError("query trajectory is empty")
    measure = trie.measure
    grid = trie.grid
    slack = grid.slack
    term = grid.terminator
    geom = trie.cell_geometry()
    dist = distance_function(measure)
    stats = stats if stats is not None else SearchStats()
    results = ResultHeap(k)

    use_pivots = measure.is_metric and len(trie.pivots) > 0
    if use_pivots:
        if d_qp is None:
            d_qp = query_pivot_distances(q, trie.pivots, measure)
        d_qp = np.asarray(d_qp, dtype=np.float64)
    pbound = _kernels.pivot_bound

    hausdorff = measure is Measure.HAUSDORFF
    frechet = measure is Measure.FRECHET
    if hausdorff:
        start = HausdorffState.start(len(q))
    else:
        start = OrderedDPState.start()

    tie = itertools.count()
    # (key, tiebreak, node, state, lb_o, lb_p, lb_t)
    queue = [(0.0, next(tie), trie.root, start, 0.0, 0.0, 0.0)]
    while queue:
        key, _, node, state, lb_o, lb_p, lb_t = heapq.heappop(queue)
        d_k = results.d_k
        if _exceeds(key, d_k):
            stats.pruned += 1 + len(queue)
            if audit is not None:
                audit.pruned.append((key, node))
                audit.pruned.extend((e[0], e[2]) for e in queue)
            break
        stats.visited += 1
        if audit is not None:
            audit.popped.append(key)
        if not node.children:
            for tid in node.tids:
                d = float(dist(q, trajectories[tid].points))
                stats.exact += 1
                results.push(d, tid)
                if audit is not None:
                    audit.evaluated.append((lb_o, lb_t, lb_p, tid, d))
            continue
        for label, child in node.children.items():
            if label == term:
                c_state, c_lb_o = state, lb_o
                full = state.full if hausdorff else state.col[-1]
            elif hausdorff:
                cx, cy = geom[label][:2]
                c_lb_o, full, c_state = _step_hausdorff(q, cx, cy, state, slack)
            elif frechet:
                cx, cy = geom[label][:2]
                c_lb_o, full, c_state = _step_frechet(q, cx, cy, state, slack)
            else:
                _, _, x0, y0, x1, y1 = geom[label]
                c_lb_o, full, c_state = _step_dtw(q, x0, y0, x1, y1, state)
            c_key = c_lb_o
            c_lb_p = 0.0
            if use_pivots:
                c_lb_p = pbound(d_qp, child.hr, slack)
                if c_lb_p > c_key:
                    c_key = c_lb_p
            c_lb_t = 0.0
            if not child.children:
                if hausdorff:
                    c_lb_t = max(full - child.d_max, 0.0)
                elif frechet:
                    c_lb_t = max(full - slack, 0.0)
                else:
                    c_lb_t = float(full)
                if c_lb_t > c_key:
                    c_key = c_lb_t
            if _exceeds(c_key, d_k):
                stats.pruned += 1
                if audit is not None:
                    audit.pruned.append((c_key, child))
                continue
            heapq.heappush(queue, (c_key, next(tie), child, c_state, c_lb_o, c_lb_p, c_lb_t))
    return results.results()


def subtree_tids(node: TrieNode) -> list[int]:
    out, stack = [], [node]
    while stack:
        n = stack.pop()
        out.extend(n.tids)
        stack.extend(n.children.values())
    return out
