"""Global partitioning of a dataset into shards.

The heterogeneous strategy groups similar trajectories into clusters and
then deals each cluster out across all shards, so every shard holds a
similar mix and contributes to every query.  Homogeneous (whole clusters
per shard) and random placement are provided as baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GridConfig
from .errors import ConfigurationError
from .zorder import cells_of, coarsen

__all__ = [
    "ClusterAssignment",
    "PartitionAssignment",
    "cluster_by_coarsening",
    "partition_heterogeneous",
    "partition_homogeneous",
    "partition_random",
    "partition",
]


@dataclass(frozen=True)
class ClusterAssignment:
    cluster_of: dict
    granularity: int

    @property
    def n_clusters(self) -> int:
        return len(set(self.cluster_of.values()))


@dataclass(frozen=True)
class PartitionAssignment:
    partition_of: dict
    n_partitions: int

    @property
    def sizes(self) -> list[int]:
        sizes = [0] * self.n_partitions
        for p in self.partition_of.values():
            sizes[p] += 1
        return sizes

    def members(self, p: int) -> list[int]:
        return sorted(t for t, q in self.partition_of.items() if q == p)


def cluster_by_coarsening(dataset, grid: GridConfig, target: int) -> ClusterAssignment:
    """Merge trajectories with equal coarse signatures, coarsening until few enough clusters.

    Starting at the grid's own resolution, each step halves the resolution
    until at most ``target`` distinct signatures remain (or a single cell
    covers everything).  Cluster ids follow the sorted signature order.
    """
    if target < 1:
        raise ConfigurationError("target cluster count must be at least 1")
    dataset = list(dataset)
    fine = [cells_of(t.points, grid) for t in dataset]
    for level in range(grid.bits, -1, -1):
        shift = grid.bits - level
        sigs = [tuple(dict.fromkeys(int(v) for v in coarsen(z, shift))) for z in fine]
        distinct = sorted(set(sigs))
        if len(distinct) <= target or level == 0:
            ids = {s: i for i, s in enumerate(distinct)}
            return ClusterAssignment({t.id: ids[s] for t, s in zip(dataset, sigs)}, level)
    raise AssertionError("unreachable")


def _check(n_partitions):
    if n_partitions < 1:
        raise ConfigurationError("need at least one partition")


def partition_heterogeneous(dataset, clusters: ClusterAssignment, n_partitions: int) -> PartitionAssignment:
    """Sort by (cluster, id) and deal round-robin."""
    _check(n_partitions)
    order = sorted((clusters.cluster_of[t.id], t.id) for t in dataset)
    return PartitionAssignment({tid: i % n_partitions for i, (_, tid) in enumerate(order)}, n_partitions)


def partition_homogeneous(dataset, clusters: ClusterAssignment, n_partitions: int) -> PartitionAssignment:
    """Fill shards in (cluster, id) order up to ``ceil(N / n_partitions)`` each."""
    _check(n_partitions)
    order = sorted((clusters.cluster_of[t.id], t.id) for t in dataset)
    cap = max(1, math.ceil(len(order) / n_partitions))
    return PartitionAssignment({tid: i // cap for i, (_, tid) in enumerate(order)}, n_partitions)


def partition_random(dataset, n_partitions: int, seed=0) -> PartitionAssignment:
    _check(n_partitions)
    ids = sorted(t.id for t in dataset)
    perm = np.random.default_rng(seed).permutation(len(ids))
    return PartitionAssignment({ids[j]: i % n_partitions for i, j in enumerate(perm)}, n_partitions)


def partition(dataset, grid: GridConfig, n_partitions: int, strategy: str, seed=0) -> tuple:
    """Dispatch on ``strategy`` (``hetero``, ``homo`` or ``random``).

    Returns ``(PartitionAssignment, ClusterAssignment or None)``.
    """
    dataset = list(dataset)
    _check(n_partitions)
    if strategy == "random":
        return partition_random(dataset, n_partitions, seed), None
    if strategy not in ("hetero", "homo"):
        raise ConfigurationError(f"unknown partitioning strategy {strategy!r}")
    target = max(1, len(dataset) // n_partitions)
    clusters = cluster_by_coarsening(dataset, grid, target)
    if strategy == "hetero":
        return partition_heterogeneous(dataset, clusters, n_partitions), clusters
    return partition_homogeneous(dataset, clusters, n_partitions), clusters
