"""Reference-point tries: construction, pivot annotation, succinct payloads.

Each root-to-leaf path spells one reference trajectory as a sequence of
z-value labels.  A reference that is a proper prefix of another ends in a
terminator child labelled ``grid.terminator`` so that every reference
finishes at a leaf.  Leaves hold the ids of all trajectories sharing the
reference and ``d_max``; every node holds per-pivot ``(min, max)``
distance ranges ``hr`` over the references beneath it.
"""

from __future__ import annotations

import itertools
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .bitvector import BitVector
from .core import GridConfig, Measure, Point, Trajectory
from .distances import distance_function
from .errors import ConfigurationError, FormatError, InputError
from .zorder import ReferenceTrajectory, deinterleave, reference_points

__all__ = [
    "TrieNode",
    "RPTrie",
    "PivotSet",
    "GreedyStats",
    "SuccinctLevels",
    "build_trie",
    "build_optimized_trie",
    "pivot_groups",
    "select_pivots",
    "annotate",
    "encode_succinct",
    "decode_succinct",
]

ROOT_LABEL = -1


class TrieNode:
    __slots__ = ("label", "children", "tids", "d_max", "hr")

    def __init__(self, label: int):
        self.label = label
        self.children: dict[int, TrieNode] = {}
        self.tids: list[int] = []
        self.d_max: float | None = None
        self.hr: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self):
        kind = f"leaf tids={self.tids}" if self.is_leaf else f"{len(self.children)} children"
        return f"TrieNode({self.label}, {kind})"


@dataclass
class RPTrie:
    root: TrieNode
    grid: GridConfig
    measure: Measure
    pivots: tuple = ()
    _geometry: dict | None = field(default=None, init=False, repr=False, compare=False)

    def cell_geometry(self) -> dict:
        """Map label to ``(cx, cy, x0, y0, x1, y1)``: cell center and bounds."""
        if self._geometry is None:
            term = self.grid.terminator
            labels = np.array(sorted({n.label for n in self.iter_nodes()} - {term}), dtype=np.int64)
            cols, rows = deinterleave(labels, self.grid.bits)
            d = self.grid.cell_size
            ox, oy = self.grid.origin
            x0 = ox + cols * d
            y0 = oy + rows * d
            cx = ox + (cols + 0.5) * d
            cy = oy + (rows + 0.5) * d
            self._geometry = {
                int(z): (float(a), float(b), float(c), float(e), float(c + d), float(e + d))
                for z, a, b, c, e in zip(labels, cx, cy, x0, y0)
            }
        return self._geometry

    def iter_nodes(self):
        """All nodes except the root, breadth-first, children in label order."""
        level = [self.root]
        while level:
            nxt = []
            for node in level:
                for label in sorted(node.children):
                    child = node.children[label]
                    yield child
                    nxt.append(child)
            level = nxt

    def iter_paths(self):
        """Yield ``(leaf, labels)`` for every leaf; terminators are dropped."""
        stack = [(self.root, ())]
        term = self.grid.terminator
        while stack:
            node, path = stack.pop()
            if node.is_leaf and node is not self.root:
                yield node, path
                continue
            for label in sorted(node.children, reverse=True):
                child = node.children[label]
                stack.append((child, path if label == term else path + (label,)))

    def node_count(self) -> int:
        """Number of nodes below the root, terminators included."""
        return sum(1 for _ in self.iter_nodes())

    def depth(self) -> int:
        depth, level = 0, [self.root]
        while True:
            level = [c for n in level for c in n.children.values()]
            if not level:
                return depth
            depth += 1

    def tids(self) -> list[int]:
        return [t for leaf, _ in self.iter_paths() for t in leaf.tids]

    def structurally_equal(self, other: "RPTrie") -> bool:
        if self.grid != other.grid or self.measure != other.measure:
            return False
        if len(self.pivots) != len(other.pivots):
            return False
        if any(a != b for a, b in zip(self.pivots, other.pivots)):
            return False
        stack = [(self.root, other.root)]
        while stack:
            a, b = stack.pop()
            if a.label != b.label or sorted(a.tids) != sorted(b.tids):
                return False
            if a.d_max != b.d_max:
                return False
            if (a.hr is None) != (b.hr is None):
                return False
            if a.hr is not None and not np.array_equal(a.hr, b.hr):
                return False
            if a.children.keys() != b.children.keys():
                return False
            stack.extend((a.children[k], b.children[k]) for k in a.children)
        return True


def _check_refs(refs, measure):
    if not refs:
        raise InputError("cannot build a trie from zero references")
    want_set = not measure.order_sensitive
    for ref in refs:
        if ref.is_set != want_set:
            form = "set" if ref.is_set else "sequence"
            raise InputError(f"reference {ref.source_id} is in {form} form, wrong for {measure.value}")
        if len(ref) == 0:
            raise InputError(f"reference {ref.source_id} is empty")


def _seal(root: TrieNode, terminator: int):
    # A node that both ends a reference and continues gets a terminator child.
    stack = [root]
    while stack:
        node = stack.pop()
        if node.children and node.tids:
            end = node.children.setdefault(terminator, TrieNode(terminator))
            end.tids.extend(node.tids)
            node.tids = []
        if node.tids:
            node.tids.sort()
        stack.extend(node.children.values())


def build_trie(refs, measure, grid: GridConfig) -> RPTrie:
    """Insert each reference in its stored order.

    Hausdorff references are sets whose stored order is ascending z-value.
    """
    measure = Measure.parse(measure)
    refs = list(refs)
    _check_refs(refs, measure)
    root = TrieNode(ROOT_LABEL)
    for ref in refs:
        node = root
        for z in ref.zvals:
            child = node.children.get(z)
            if child is None:
                child = node.children[z] = TrieNode(z)
            node = child
        node.tids.append(ref.source_id)
    _seal(root, grid.terminator)
    return RPTrie(root, grid, measure)


@dataclass
class GreedyStats:
    """Work counters from :func:`build_optimized_trie`."""

    root_counts: dict = field(default_factory=dict)
    ops: int = 0
    total_zvals: int = 0
    distinct_cells: int = 0
    max_set_size: int = 0


def build_optimized_trie(zsets, grid: GridConfig, stats: GreedyStats | None = None) -> RPTrie:
    """Greedy hitting-set arrangement of Hausdorff z-value sets.

    At every node the children are chosen one at a time: the most frequent
    remaining z-value (ties to the smaller z-value) becomes a child and
    takes every set containing it.  Frequencies of the sets still
    unassigned come from subtracting each child's count array from the
    parent's rather than recounting.

    Parameters
    ----------
    zsets : iterable of ReferenceTrajectory or (tid, iterable of int)
    grid : GridConfig
    stats : GreedyStats, optional
        Filled in with the root frequency array and an operation count.
    """
    items = []
    for entry in zsets:
        if isinstance(entry, ReferenceTrajectory):
            if not entry.is_set:
                raise InputError("trie optimization needs set-form (Hausdorff) references")
            tid, zs = entry.source_id, entry.zvals
        else:
            tid, zs = entry
        s = frozenset(int(z) for z in zs)
        if not s:
            raise InputError(f"z-value set for {tid} is empty")
        items.append((tid, s))
    if not items:
        raise InputError("cannot build a trie from zero references")
    if stats is None:
        stats = GreedyStats()
    stats.total_zvals = sum(len(s) for _, s in items)
    stats.distinct_cells = len(set().union(*(s for _, s in items)))
    stats.max_set_size = max(len(s) for _, s in items)

    counts = Counter()
    for _, s in items:
        counts.update(s)
    stats.ops += stats.total_zvals
    stats.root_counts = dict(sorted(counts.items()))

    root = TrieNode(ROOT_LABEL)
    work = [(root, items, counts)]
    while work:
        node, members, node_counts = work.pop()
        active = []
        for tid, s in members:
            if s:
                active.append((tid, s))
            else:
                node.tids.append(tid)
        if not active:
            continue
        index: dict[int, list[int]] = {}
        for i, (_, s) in enumerate(active):
            for z in s:
                index.setdefault(z, []).append(i)
        taken = [False] * len(active)
        residual = {z: c for z, c in node_counts.items() if c}
        while residual:
            stats.ops += len(residual)
            z = max(residual.items(), key=lambda kv: (kv[1], -kv[0]))[0]
            picked = [i for i in index[z] if not taken[i]]
            child_counts = Counter()
            sub = []
            for i in picked:
                taken[i] = True
                tid, s = active[i]
                child_counts.update(s)
                stats.ops += len(s)
                sub.append((tid, s - {z}))
            for cz, c in child_counts.items():
                left = residual[cz] - c
                if left:
                    residual[cz] = left
                else:
                    del residual[cz]
            del child_counts[z]
            child = node.children[z] = TrieNode(z)
            work.append((child, sub, child_counts))
    _seal(root, grid.terminator)
    return RPTrie(root, grid, Measure.HAUSDORFF)


@dataclass(frozen=True)
class PivotSet:
    pivots: tuple
    score: float

    def __len__(self):
        return len(self.pivots)


def pivot_groups(n: int, n_pivots: int, groups_m: int, seed) -> list[np.ndarray]:
    """The candidate index groups :func:`select_pivots` scores, in order."""
    rng = np.random.default_rng(seed)
    return [np.sort(rng.choice(n, size=n_pivots, replace=False)) for _ in range(groups_m)]


def select_pivots(dataset, n_pivots: int, groups_m: int, measure, seed=0) -> PivotSet:
    """Pick the sampled group of trajectories with the largest pairwise distance sum."""
    measure = Measure.parse(measure)
    dataset = list(dataset)
    if not measure.is_metric:
        raise ConfigurationError(f"{measure.value} is not a metric; pivots are unsupported")
    if n_pivots < 0 or n_pivots > len(dataset):
        raise ConfigurationError(f"cannot pick {n_pivots} pivots from {len(dataset)} trajectories")
    if n_pivots == 0:
        return PivotSet((), 0.0)
    if groups_m < 1:
        raise ConfigurationError("groups_m must be at least 1")
    dist = distance_function(measure)
    best, best_score = None, -1.0
    for group in pivot_groups(len(dataset), n_pivots, groups_m, seed):
        score = 0.0
        for i, j in itertools.combinations(group, 2):
            score += dist(dataset[i].points, dataset[j].points)
        if score > best_score:
            best, best_score = group, score
    return PivotSet(tuple(dataset[i] for i in best), float(best_score))


def annotate(trie: RPTrie, pivots, trajectories) -> RPTrie:
    """Fill in leaf ``d_max`` and per-node pivot ranges ``hr``, in place.

    ``trajectories`` maps id to :class:`Trajectory` and must cover every
    leaf tid.  Distances for ``hr`` are measured from each leaf's
    reference trajectory (cell centers), not from its members.
    """
    pivots = tuple(pivots.pivots if isinstance(pivots, PivotSet) else pivots)
    if pivots and not trie.measure.is_metric:
        raise ConfigurationError("pivot ranges need a metric measure")
    dist = distance_function(trie.measure)
    n_p = len(pivots)
    for leaf, labels in trie.iter_paths():
        ref = reference_points(np.asarray(labels, dtype=np.int64), trie.grid)
        leaf.d_max = max(dist(trajectories[t].points, ref) for t in leaf.tids)
        hr = np.empty((n_p, 2))
        for i, p in enumerate(pivots):
            hr[i] = dist(ref, p.points)
        leaf.hr = hr
    # children before parents: reverse breadth-first order
    order = [trie.root, *trie.iter_nodes()]
    for node in reversed(order):
        if node.is_leaf:
            continue
        hrs = np.stack([c.hr for c in node.children.values()])
        node.hr = np.stack([hrs[:, :, 0].min(axis=0), hrs[:, :, 1].max(axis=0)], axis=1)
    trie.pivots = pivots
    return trie


# ---------------------------------------------------------------- succinct form

MAGIC = b"RPTT"
VERSION = 1
_MEASURE_CODE = {Measure.HAUSDORFF: 0, Measure.FRECHET: 1, Measure.DTW: 2}
_CODE_MEASURE = {v: k for k, v in _MEASURE_CODE.items()}
_NO_LABEL = 0xFFFFFFFF


@dataclass
class SuccinctLevels:
    """Upper levels as child/internal bitmaps, lower levels as byte records.

    Each node at depth ``< dense_levels`` owns ``grid.n_cells + 1`` bits in
    ``b_c`` and ``b_l`` (the extra slot is the terminator).  ``sparse_bytes``
    holds the annotations of those nodes in breadth-first order, then one
    length-prefixed preorder record per subtree rooted at depth
    ``dense_levels``.
    """

    grid: GridConfig
    measure: Measure
    pivots: tuple
    dense_levels: int
    b_c: BitVector
    b_l: BitVector
    sparse_bytes: bytes

    @property
    def rank_index(self) -> np.ndarray:
        return self.b_c.rank_index

    def to_bytes(self) -> bytes:
        out = bytearray()
        g = self.grid
        out += MAGIC
        out += struct.pack("<H", VERSION)
        out += struct.pack("<dddI", g.origin.x, g.origin.y, g.side_u, g.level_l)
        out += struct.pack("<BBB", _MEASURE_CODE[self.measure], len(self.pivots), self.dense_levels)
        for p in self.pivots:
            out += _pack_trajectory(p)
        for bv in (self.b_c, self.b_l):
            out += struct.pack("<Q", len(bv))
            out += bv.to_bytes()
        out += struct.pack("<Q", len(self.sparse_bytes))
        out += self.sparse_bytes
        return bytes(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SuccinctLevels":
        r = _Reader(raw, "trie payload")
        if r.take(4) != MAGIC:
            raise FormatError("bad magic", "trie payload", 0)
        version = r.unpack("<H")[0]
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", "trie payload", 4)
        ox, oy, side, level = r.unpack("<dddI")
        try:
            grid = GridConfig(Point(ox, oy), side, level)
        except ConfigurationError as exc:
            raise FormatError(f"invalid grid: {exc}", "trie payload", 6) from None
        at = r.pos
        code, n_p, dense = r.unpack("<BBB")
        if code not in _CODE_MEASURE:
            raise FormatError(f"unknown measure code {code}", "trie payload", at)
        pivots = tuple(_unpack_trajectory(r) for _ in range(n_p))
        bitmaps = []
        for name in ("b_c", "b_l"):
            at = r.pos
            nbits = r.unpack("<Q")[0]
            nbytes = (nbits + 7) // 8
            data = r.take(nbytes)
            bitmaps.append(BitVector.from_bytes(data, nbits))
            if nbits % (grid.n_cells + 1):
                raise FormatError(f"{name} length is not a whole number of nodes", "trie payload", at)
        n_sparse = r.unpack("<Q")[0]
        sparse = r.take(n_sparse)
        if r.pos != len(raw):
            raise FormatError("trailing bytes", "trie payload", r.pos)
        return cls(grid, _CODE_MEASURE[code], pivots, dense, bitmaps[0], bitmaps[1], sparse)


class _Reader:
    def __init__(self, raw: bytes, section: str, base: int = 0):
        self.raw = raw
        self.pos = 0
        self.section = section
        self.base = base

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.raw):
            raise FormatError("truncated", self.section, self.base + self.pos)
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def _pack_trajectory(t: Trajectory) -> bytes:
    return struct.pack("<QI", t.id, len(t.points)) + t.points.astype("<f8").tobytes()


def _unpack_trajectory(r: _Reader) -> Trajectory:
    at = r.pos
    tid, n = r.unpack("<QI")
    pts = r.array("<f8", 2 * n).reshape(n, 2)
    try:
        return Trajectory(int(tid), pts)
    except InputError as exc:
        raise FormatError(f"bad trajectory: {exc}", r.section, r.base + at) from None


def _pack_annotation(node: TrieNode, n_p: int) -> bytes:
    if node.hr is None or node.d_max is None and node.is_leaf:
        raise ValueError("trie must be annotated before encoding")
    hr = node.hr.reshape(n_p, 2).astype("<f8")
    out = hr.tobytes() + struct.pack("<B", node.is_leaf)
    if node.is_leaf:
        out += struct.pack("<dI", node.d_max, len(node.tids))
        out += np.asarray(node.tids, dtype="<u8").tobytes()
    return out


def _unpack_annotation(r: _Reader, node: TrieNode, n_p: int) -> bool:
    node.hr = r.array("<f8", 2 * n_p).reshape(n_p, 2)
    at = r.pos
    flag = r.unpack("<B")[0]
    if flag > 1:
        raise FormatError(f"bad leaf flag {flag}", r.section, r.base + at)
    if flag:
        d_max, n = r.unpack("<dI")
        node.d_max = d_max
        node.tids = [int(t) for t in r.array("<u8", n)]
    return bool(flag)


def _pack_subtree(node: TrieNode, n_p: int) -> bytes:
    out = bytearray()
    stack = [node]
    while stack:
        cur = stack.pop()
        label = _NO_LABEL if cur.label == ROOT_LABEL else cur.label
        out += struct.pack("<I", label)
        out += _pack_annotation(cur, n_p)
        if not cur.is_leaf:
            out += struct.pack("<I", len(cur.children))
            stack.extend(cur.children[k] for k in sorted(cur.children, reverse=True))
    return bytes(out)


def _unpack_subtree(r: _Reader, n_p: int, max_label: int) -> TrieNode:
    def read_node():
        at = r.pos
        label = r.unpack("<I")[0]
        if label == _NO_LABEL:
            label = ROOT_LABEL
        elif label > max_label:
            raise FormatError(f"label {label} out of range", r.section, r.base + at)
        node = TrieNode(label)
        if _unpack_annotation(r, node, n_p):
            return node, 0
        at = r.pos
        n_children = r.unpack("<I")[0]
        if n_children == 0:
            raise FormatError("internal node without children", r.section, r.base + at)
        return node, n_children

    root, pending = read_node()
    stack = [(root, pending)]
    while stack:
        parent, left = stack[-1]
        if left == 0:
            stack.pop()
            continue
        stack[-1] = (parent, left - 1)
        at = r.pos
        child, n = read_node()
        if child.label in parent.children or child.label == ROOT_LABEL:
            raise FormatError("duplicate or misplaced child label", r.section, r.base + at)
        parent.children[child.label] = child
        stack.append((child, n))
    return root


def encode_succinct(trie: RPTrie, dense_levels: int = 2) -> SuccinctLevels:
    if dense_levels < 0 or dense_levels > 255:
        raise ConfigurationError("dense_levels must be in [0, 255]")
    width = trie.grid.n_cells + 1
    n_p = len(trie.pivots)
    dense_nodes = []
    sparse_roots = []
    level = [trie.root]
    depth = 0
    while level and depth < dense_levels:
        dense_nodes.extend(level)
        nxt = []
        for node in level:
            nxt.extend(node.children[k] for k in sorted(node.children))
        level = nxt
        depth += 1
    sparse_roots = level
    b_c = np.zeros(len(dense_nodes) * width, dtype=bool)
    b_l = np.zeros_like(b_c)
    sparse = bytearray()
    for k, node in enumerate(dense_nodes):
        for label, child in node.children.items():
            b_c[k * width + label] = True
            b_l[k * width + label] = not child.is_leaf
        rec = _pack_annotation(node, n_p)
        sparse += struct.pack("<I", len(rec)) + rec
    for node in sparse_roots:
        rec = _pack_subtree(node, n_p)
        sparse += struct.pack("<I", len(rec)) + rec
    return SuccinctLevels(
        trie.grid, trie.measure, tuple(trie.pivots), dense_levels,
        BitVector(b_c), BitVector(b_l), bytes(sparse),
    )


def decode_succinct(levels: SuccinctLevels) -> RPTrie:
    """Rebuild the linked trie from its succinct form."""
    grid = levels.grid
    width = grid.n_cells + 1
    n_p = len(levels.pivots)
    b_c, b_l = levels.b_c, levels.b_l
    if len(b_c) != len(b_l):
        raise FormatError("b_c and b_l differ in length", "trie payload")
    n_dense = len(b_c) // width
    bits_c = np.unpackbits(b_c.data, bitorder="little", count=len(b_c)).astype(bool)
    bits_l = np.unpackbits(b_l.data, bitorder="little", count=len(b_l)).astype(bool)
    if np.any(bits_l & ~bits_c):
        raise FormatError("b_l marks a child that b_c does not", "trie payload")
    r = _Reader(levels.sparse_bytes, "sparse bytes")

    def record():
        at = r.pos
        n = r.unpack("<I")[0]
        return _Reader(r.take(n), "sparse bytes", r.base + at + 4)

    # node i (breadth-first, root = 0) is the child at the i-th set bit of b_c
    nodes: list[TrieNode] = []
    internal: list[bool] = []
    root = TrieNode(ROOT_LABEL)
    if n_dense == 0:
        if levels.dense_levels != 0:
            raise FormatError("missing dense levels", "trie payload")
        sub = record()
        root = _unpack_subtree(sub, n_p, grid.terminator)
        if sub.pos != len(sub.raw) or r.pos != len(r.raw):
            raise FormatError("trailing bytes", "sparse bytes", r.pos)
        return RPTrie(root, grid, levels.measure, levels.pivots)

    nodes.append(root)
    internal.append(True)
    for k in range(n_dense):
        if k >= len(nodes):
            raise FormatError("dense bitmap for a node that does not exist", "trie payload")
        node = nodes[k]
        ann = record()
        is_leaf = _unpack_annotation(ann, node, n_p)
        if ann.pos != len(ann.raw):
            raise FormatError("annotation record has trailing bytes", "sparse bytes", ann.base)
        row = bits_c[k * width : (k + 1) * width]
        if is_leaf == bool(row.any()) or is_leaf == internal[k]:
            raise FormatError("leaf flag disagrees with bitmaps", "sparse bytes", ann.base)
        for label in np.flatnonzero(row):
            pos = k * width + int(label)
            child_index = b_c.rank1(pos) + 1
            if child_index != len(nodes):
                raise FormatError("bitmap rank mismatch", "trie payload")
            child = TrieNode(int(label))
            node.children[int(label)] = child
            nodes.append(child)
            internal.append(bool(bits_l[pos]))
    for node, is_internal in zip(nodes[n_dense:], internal[n_dense:]):
        sub = record()
        built = _unpack_subtree(sub, n_p, grid.terminator)
        if sub.pos != len(sub.raw):
            raise FormatError("subtree record has trailing bytes", "sparse bytes", sub.base)
        if built.label != node.label or built.is_leaf == is_internal:
            raise FormatError("subtree root disagrees with bitmaps", "sparse bytes", sub.base)
        node.children, node.tids, node.d_max, node.hr = built.children, built.tids, built.d_max, built.hr
    if r.pos != len(r.raw):
        raise FormatError("trailing bytes", "sparse bytes", r.pos)
    return RPTrie(root, grid, levels.measure, levels.pivots)
