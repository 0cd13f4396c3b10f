"""Coordinator: partitioned index build, fan-out queries, persistence, benchmarking."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import struct
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import GridConfig, Measure, Trajectory, build_grid
from .distances import as_points, distance_function
from .errors import ConfigurationError, FormatError, InputError
from .partition import PartitionAssignment, partition
from .rp_trie import (
    PivotSet,
    RPTrie,
    SuccinctLevels,
    _pack_trajectory,
    _Reader,
    _unpack_trajectory,
    annotate,
    build_optimized_trie,
    build_trie,
    decode_succinct,
    encode_succinct,
    select_pivots,
)
from .search import ResultHeap, SearchStats, query_pivot_distances, top_k_search
from .zorder import to_reference

__all__ = [
    "IngestResult",
    "PartitionedIndex",
    "QueryResult",
    "read_trajectories",
    "ingest",
    "write_trajectories",
    "generate_clustered",
    "build_index",
    "query",
    "linear_scan",
    "index_to_bytes",
    "index_from_bytes",
    "save_index",
    "load_index",
    "bench",
]

log = logging.getLogger(__name__)

CONTAINER_MAGIC = b"RPSX"
CONTAINER_VERSION = 1


# ------------------------------------------------------------------ text format


def _parse_line(line: str, lineno: int) -> tuple[int, np.ndarray]:
    try:
        head, body = line.split("\t", 1)
        tid = int(head)
        if tid < 0:
            raise ValueError("negative id")
        pairs = [p for p in body.strip().split(";") if p.strip()]
        pts = np.array([[float(v) for v in p.split(",")] for p in pairs], dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError("expected x,y pairs")
        if not np.isfinite(pts).all():
            raise ValueError("non-finite coordinate")
    except ValueError as exc:
        raise InputError(f"line {lineno}: malformed trajectory ({exc})") from None
    return tid, pts


def read_trajectories(path) -> list[Trajectory]:
    """Parse ``id<TAB>x1,y1;x2,y2;...`` lines without any length filtering."""
    out, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            tid, pts = _parse_line(line.rstrip("\n"), lineno)
            if tid in seen:
                raise InputError(f"line {lineno}: duplicate trajectory id {tid}")
            seen.add(tid)
            out.append(Trajectory(tid, pts))
    return out


@dataclass
class IngestResult:
    trajectories: list
    read: int = 0
    dropped: int = 0
    split: int = 0


def ingest(path, fmt: str = "tsv", min_len: int = 10, max_len: int = 1000) -> IngestResult:
    """Read a dataset, split long trajectories and drop short ones.

    Trajectories longer than ``max_len`` are cut into consecutive chunks;
    the first chunk keeps the original id and later chunks get fresh ids
    above the largest id in the file.  The length filter runs after
    splitting.
    """
    if fmt != "tsv":
        raise ConfigurationError(f"unsupported input format {fmt!r}")
    if max_len < 1 or min_len < 1:
        raise ConfigurationError("min_len and max_len must be positive")
    raw = read_trajectories(path)
    next_id = max((t.id for t in raw), default=-1) + 1
    kept, dropped, split = [], 0, 0
    for t in raw:
        chunks = [t.points[i : i + max_len] for i in range(0, len(t.points), max_len)]
        if len(chunks) > 1:
            split += 1
        for j, pts in enumerate(chunks):
            tid = t.id
            if j:
                tid, next_id = next_id, next_id + 1
            if len(pts) < min_len:
                dropped += 1
                continue
            kept.append(Trajectory(tid, pts))
    log.info("ingested %s: %d read, %d split, %d dropped, %d kept", path, len(raw), split, dropped, len(kept))
    if not kept:
        raise InputError(f"{path}: no trajectories left after filtering")
    return IngestResult(kept, len(raw), dropped, split)


def write_trajectories(path, trajectories):
    with open(path, "w", encoding="utf-8") as fh:
        for t in trajectories:
            body = ";".join(f"{x!r},{y!r}" for x, y in t.points.tolist())
            fh.write(f"{t.id}\t{body}\n")


def generate_clustered(
    clusters: int = 50,
    per_cluster: int = 100,
    len_range=(10, 50),
    seed=0,
    extent: float = 100.0,
    spread: float = 0.5,
    step: float = 0.4,
) -> list[Trajectory]:
    """Random-walk trajectories grouped around ``clusters`` seeded starting points.

    Every member of a cluster starts near the cluster center and follows
    the cluster heading with Gaussian jitter, so clusters stay dense.
    """
    lo, hi = len_range
    if not 1 <= lo <= hi:
        raise ConfigurationError(f"bad length range {len_range}")
    rng = np.random.default_rng(seed)
    out = []
    tid = 0
    for _ in range(clusters):
        center = rng.uniform(0.1 * extent, 0.9 * extent, size=2)
        heading = rng.uniform(0, 2 * np.pi)
        for _ in range(per_cluster):
            n = int(rng.integers(lo, hi + 1))
            angle = heading + rng.normal(0, 0.3, size=n)
            steps = np.stack([np.cos(angle), np.sin(angle)], axis=1) * step
            steps += rng.normal(0, step / 2, size=(n, 2))
            steps[0] = rng.normal(0, spread, size=2)
            out.append(Trajectory(tid, center + np.cumsum(steps, axis=0)))
            tid += 1
    return out


# ------------------------------------------------------------------ index


def dataset_digest(trajectories) -> str:
    h = hashlib.sha256()
    for t in sorted(trajectories, key=lambda t: t.id):
        h.update(_pack_trajectory(t))
    return h.hexdigest()


@dataclass
class PartitionedIndex:
    grid: GridConfig
    measure: Measure
    pivots: PivotSet
    assignment: PartitionAssignment
    shards: list  # RPTrie, or None for an empty partition
    trajectories: dict
    manifest: dict = field(default_factory=dict)

    @property
    def n_partitions(self) -> int:
        return len(self.shards)


@dataclass
class QueryResult:
    hits: list
    stats: list
    elapsed: float = 0.0

    @property
    def ids(self) -> list[int]:
        return [t for t, _ in self.hits]

    @property
    def distances(self) -> list[float]:
        return [d for _, d in self.hits]

    def totals(self) -> SearchStats:
        total = SearchStats()
        for s in self.stats:
            total += s
        return total


def _build_shard(trajs, grid, measure, pivots, optimize):
    if not trajs:
        return None
    refs = [to_reference(t, grid, measure) for t in trajs]
    if optimize and measure is Measure.HAUSDORFF:
        trie = build_optimized_trie(refs, grid)
    else:
        trie = build_trie(refs, measure, grid)
    annotate(trie, pivots, {t.id: t for t in trajs})
    trie.cell_geometry()
    return trie


def build_index(
    dataset,
    measure="hausdorff",
    requested_delta: float = 1.0,
    n_partitions: int = 64,
    n_pivots: int = 5,
    groups_m: int = 10,
    strategy: str = "hetero",
    optimize_trie: bool = True,
    seed: int = 0,
    dense_levels: int = 2,
    padding: float = 1e-3,
    workers: int | None = None,
    grid: GridConfig | None = None,
) -> PartitionedIndex:
    """Grid, pivots, partitioning, then one annotated trie per partition.

    Shards are built concurrently; the result depends only on the inputs
    and ``seed``.  The grid is derived from the data's bounding box and
    ``requested_delta`` unless an explicit ``grid`` is passed.
    """
    measure = Measure.parse(measure)
    dataset = list(dataset)
    if not dataset:
        raise InputError("cannot index an empty dataset")
    ids = [t.id for t in dataset]
    if len(set(ids)) != len(ids):
        raise InputError("trajectory ids must be unique")
    if n_partitions < 1:
        raise ConfigurationError("n_partitions must be at least 1")
    allpts = np.concatenate([t.points for t in dataset])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    if grid is None:
        grid = build_grid((lo[0], lo[1], hi[0], hi[1]), requested_delta, padding=padding)
    elif (lo < [grid.origin.x, grid.origin.y]).any() or (hi > [grid.origin.x + grid.side_u, grid.origin.y + grid.side_u]).any():
        raise ConfigurationError("dataset extends outside the given grid")

    if measure.is_metric and n_pivots > 0:
        pivots = select_pivots(dataset, n_pivots, groups_m, measure, seed)
    else:
        pivots = PivotSet((), 0.0)
    assignment, _ = partition(dataset, grid, n_partitions, strategy, seed)

    groups = [[] for _ in range(n_partitions)]
    for t in sorted(dataset, key=lambda t: t.id):
        groups[assignment.partition_of[t.id]].append(t)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        shards = list(pool.map(lambda g: _build_shard(g, grid, measure, pivots, optimize_trie), groups))

    manifest = {
        "measure": measure.value,
        "requested_delta": float(requested_delta),
        "padding": float(padding),
        "n_partitions": n_partitions,
        "n_pivots": len(pivots),
        "groups_m": groups_m,
        "strategy": strategy,
        "optimize_trie": bool(optimize_trie and measure is Measure.HAUSDORFF),
        "dense_levels": dense_levels,
        "seed": seed,
        "n_trajectories": len(dataset),
        "dataset_sha256": dataset_digest(dataset),
        "grid": {"origin": list(grid.origin), "side_u": grid.side_u, "level_l": grid.level_l},
    }
    return PartitionedIndex(grid, measure, pivots, assignment, shards, {t.id: t for t in dataset}, manifest)


def query(index: PartitionedIndex, q, k: int = 100, workers: int | None = None) -> QueryResult:
    """Search every shard and merge the local top-k lists."""
    if k < 1:
        raise InputError(f"k must be at least 1, got {k}")
    pts = as_points(q)
    if len(pts) == 0:
        raise InputError("query trajectory is empty")
    started = time.perf_counter()
    d_qp = None
    if index.measure.is_metric and len(index.pivots):
        d_qp = query_pivot_distances(pts, index.pivots.pivots, index.measure)

    def run(shard):
        stats = SearchStats()
        if shard is None:
            return [], stats
        return top_k_search(shard, pts, k, index.trajectories, d_qp=d_qp, stats=stats), stats

    if len(index.shards) == 1 or workers == 1:
        outcomes = [run(s) for s in index.shards]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, index.shards))
    merged = ResultHeap(k)
    for hits, _ in outcomes:
        for tid, d in hits:
            merged.push(d, tid)
    return QueryResult(merged.results(), [s for _, s in outcomes], time.perf_counter() - started)


def linear_scan(dataset, q, k: int, measure) -> QueryResult:
    """Exact distances to every trajectory; the reference answer for tests."""
    if k < 1:
        raise InputError(f"k must be at least 1, got {k}")
    if isinstance(dataset, dict):
        dataset = dataset.values()
    dist = distance_function(measure)
    pts = as_points(q)
    started = time.perf_counter()
    heap = ResultHeap(k)
    n = 0
    for t in dataset:
        heap.push(float(dist(pts, t.points)), t.id)
        n += 1
    stats = SearchStats(visited=0, pruned=0, exact=n)
    return QueryResult(heap.results(), [stats], time.perf_counter() - started)


# ------------------------------------------------------------------ persistence


def _block(payload: bytes) -> bytes:
    return struct.pack("<QI", len(payload), zlib.crc32(payload)) + payload


def _read_block(r: _Reader, name: str) -> bytes:
    at = r.base + r.pos
    n, crc = r.unpack("<QI")
    payload = r.take(n)
    if zlib.crc32(payload) != crc:
        raise FormatError("checksum mismatch", name, at)
    return payload


def index_to_bytes(index: PartitionedIndex) -> bytes:
    out = bytearray(CONTAINER_MAGIC)
    out += struct.pack("<H", CONTAINER_VERSION)
    manifest = json.dumps(index.manifest, sort_keys=True, separators=(",", ":")).encode()
    out += struct.pack("<I", len(manifest)) + manifest

    pivots = struct.pack("<I", len(index.pivots)) + b"".join(_pack_trajectory(p) for p in index.pivots.pivots)
    out += _block(pivots)

    items = sorted(index.assignment.partition_of.items())
    assign = struct.pack("<QI", len(items), index.assignment.n_partitions)
    assign += b"".join(struct.pack("<QI", tid, p) for tid, p in items)
    out += _block(assign)

    trajs = sorted(index.trajectories.values(), key=lambda t: t.id)
    out += _block(struct.pack("<Q", len(trajs)) + b"".join(_pack_trajectory(t) for t in trajs))

    dense = index.manifest.get("dense_levels", 2)
    out += struct.pack("<I", len(index.shards))
    for shard in index.shards:
        payload = b"" if shard is None else encode_succinct(shard, dense).to_bytes()
        out += _block(payload)
    return bytes(out)


def index_from_bytes(raw: bytes) -> PartitionedIndex:
    r = _Reader(raw, "header")
    if r.take(4) != CONTAINER_MAGIC:
        raise FormatError("not an index file (bad magic)", "header", 0)
    version = r.unpack("<H")[0]
    if version != CONTAINER_VERSION:
        raise FormatError(f"unsupported index version {version}", "header", 4)
    r.section = "manifest"
    n = r.unpack("<I")[0]
    at = r.pos
    try:
        manifest = json.loads(r.take(n).decode("utf-8"))
        measure = Measure.parse(manifest["measure"])
        n_parts = int(manifest["n_partitions"])
    except (ValueError, KeyError, TypeError, ConfigurationError) as exc:
        raise FormatError(f"unreadable manifest ({exc})", "manifest", at) from None

    r.section = "pivots"
    pr = _Reader(_read_block(r, "pivots"), "pivots")
    pivots = tuple(_unpack_trajectory(pr) for _ in range(pr.unpack("<I")[0]))
    if pr.pos != len(pr.raw):
        raise FormatError("trailing bytes", "pivots", pr.pos)

    r.section = "assignment"
    ar = _Reader(_read_block(r, "assignment"), "assignment")
    count, n_assigned_parts = ar.unpack("<QI")
    pairs = ar.take(count * 12)
    if ar.pos != len(ar.raw) or n_assigned_parts != n_parts:
        raise FormatError("assignment block inconsistent", "assignment")
    table = np.frombuffer(pairs, dtype=np.dtype([("id", "<u8"), ("p", "<u4")]))
    partition_of = {int(t): int(p) for t, p in zip(table["id"], table["p"])}

    r.section = "trajectories"
    tr = _Reader(_read_block(r, "trajectories"), "trajectories")
    trajs = [_unpack_trajectory(tr) for _ in range(tr.unpack("<Q")[0])]
    if tr.pos != len(tr.raw):
        raise FormatError("trailing bytes", "trajectories", tr.pos)
    if dataset_digest(trajs) != manifest.get("dataset_sha256"):
        raise FormatError("dataset digest mismatch", "trajectories")
    trajectories = {t.id: t for t in trajs}
    if len(trajectories) != len(trajs) or set(partition_of) != set(trajectories):
        raise FormatError("assignment does not cover the dataset", "assignment")
    if any(not 0 <= p < n_parts for p in partition_of.values()):
        raise FormatError("partition index out of range", "assignment")

    r.section = "shards"
    n_shards = r.unpack("<I")[0]
    if n_shards != n_parts:
        raise FormatError(f"expected {n_parts} shards, found {n_shards}", "shards")
    shards = []
    grid = None
    for i in range(n_shards):
        payload = _read_block(r, f"shard {i}")
        members = sorted(t for t, p in partition_of.items() if p == i)
        if not payload:
            if members:
                raise FormatError("empty payload for a non-empty partition", f"shard {i}")
            shards.append(None)
            continue
        try:
            trie = decode_succinct(SuccinctLevels.from_bytes(payload))
        except FormatError as exc:
            raise FormatError(f"shard {i}: {exc}", f"shard {i}", exc.offset) from None
        if trie.measure is not measure or trie.pivots != pivots:
            raise FormatError("shard disagrees with index header", f"shard {i}")
        if grid is None:
            grid = trie.grid
        elif trie.grid != grid:
            raise FormatError("shards use different grids", f"shard {i}")
        if sorted(trie.tids()) != members:
            raise FormatError("shard contents disagree with assignment", f"shard {i}")
        trie.cell_geometry()
        shards.append(trie)
    if r.pos != len(raw):
        raise FormatError("trailing bytes after last shard", "shards", r.pos)
    if grid is None:
        raise FormatError("index has no non-empty shard", "shards")
    g = manifest.get("grid", {})
    if [grid.origin.x, grid.origin.y, grid.side_u, grid.level_l] != [*g.get("origin", []), g.get("side_u"), g.get("level_l")]:
        raise FormatError("grid disagrees with manifest", "manifest")
    assignment = PartitionAssignment(partition_of, n_parts)
    return PartitionedIndex(
        grid, measure, PivotSet(pivots, float("nan")), assignment, shards, trajectories, manifest
    )


def save_index(index: PartitionedIndex, path):
    data = index_to_bytes(index)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_index(path) -> PartitionedIndex:
    with open(path, "rb") as fh:
        return index_from_bytes(fh.read())


# ------------------------------------------------------------------ benchmark


def bench(index: PartitionedIndex, queries, k: int = 100, repeats: int = 20) -> dict:
    """Time each query ``repeats`` times against the index and a linear scan."""
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")
    queries = list(queries)
    if not queries:
        raise InputError("no queries to run")
    rows = []
    for q in queries:
        times = []
        for _ in range(repeats):
            res = query(index, q, k)
            times.append(res.elapsed)
        ls = linear_scan(index.trajectories, q, k, index.measure)
        if ls.hits != res.hits:
            raise AssertionError(f"query {getattr(q, 'id', '?')}: index disagrees with linear scan")
        tot = res.totals()
        mean = sum(times) / len(times)
        rows.append({
            "query": getattr(q, "id", None),
            "mean_s": mean,
            "min_s": min(times),
            "max_s": max(times),
            "visited": tot.visited,
            "pruned": tot.pruned,
            "exact": tot.exact,
            "ls_s": ls.elapsed,
            "speedup": ls.elapsed / mean if mean > 0 else math.inf,
        })
    return {
        "measure": index.measure.value,
        "k": k,
        "repeats": repeats,
        "n_trajectories": len(index.trajectories),
        "n_partitions": index.n_partitions,
        "queries": rows,
    }
