import itertools
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajtrie import ConfigurationError, FormatError, InputError, Measure, Trajectory
from trajtrie.core import GridConfig, Point
from trajtrie.distances import distance
from trajtrie.rp_trie import (
    GreedyStats,
    RPTrie,
    SuccinctLevels,
    annotate,
    build_optimized_trie,
    build_trie,
    decode_succinct,
    encode_succinct,
    pivot_groups,
    select_pivots,
)
from trajtrie.zorder import reference_points, to_reference

from conftest import EIGHT_SETS, random_dataset

MEASURES = list(Measure)
GRID16 = GridConfig(Point(0.0, 0.0), 4.0, 4)  # 4-bit cells for the eight-set collection


def children(node):
    return sorted(node.children)


def shape(node):
    """Nested (label, children) tuples: a structure-only view for comparisons."""
    return tuple((k, shape(node.children[k])) for k in sorted(node.children))


# ---------------------------------------------------------------- build_trie


def test_two_trajectories_sequence_form_shares_prefix(grid8, five):
    refs = [to_reference(t, grid8, "frechet") for t in (five[1], five[4])]
    trie = build_trie(refs, "frechet", grid8)
    root = trie.root
    assert children(root) == [0b000010]
    second = root.children[0b000010]
    assert children(second) == [0b001000]
    assert children(second.children[0b001000]) == [0b011000, 0b011001]
    assert trie.node_count() == 7


def test_two_trajectories_set_form_node_counts(grid8, five):
    # ascending-z set form shares only 000010; the greedy form shares two cells
    refs = [to_reference(t, grid8, "hausdorff") for t in (five[1], five[4])]
    plain = build_trie(refs, "hausdorff", grid8)
    greedy = build_optimized_trie(refs, grid8)
    assert children(plain.root) == [0b000010]
    assert len(plain.root.children[0b000010].children) == 2
    assert plain.node_count() == 8
    assert greedy.node_count() == 7
    assert children(greedy.root.children[0b000010]) == [0b001000]


def test_single_reference_chain(grid8, five):
    trie = build_trie([to_reference(five[2], grid8, "dtw")], "dtw", grid8)
    assert trie.depth() == 5 and trie.node_count() == 5
    (leaf, labels), = trie.iter_paths()
    assert leaf.tids == [3]


def test_identical_references_share_leaf(grid8):
    a = Trajectory(1, [[0.5, 0.5], [1.5, 1.5]])
    b = Trajectory(2, [[0.6, 0.4], [1.4, 1.6]])
    trie = build_trie([to_reference(t, grid8, "frechet") for t in (b, a)], "frechet", grid8)
    leaves = list(trie.iter_paths())
    assert len(leaves) == 1 and leaves[0][0].tids == [1, 2]


def test_prefix_reference_gets_terminator(grid8):
    a = Trajectory(1, [[0.5, 0.5], [1.5, 1.5]])
    b = Trajectory(2, [[0.5, 0.5], [1.5, 1.5], [2.5, 2.5]])
    trie = build_trie([to_reference(t, grid8, "dtw") for t in (a, b)], "dtw", grid8)
    mid = trie.root.children[0].children[0b000011]
    assert grid8.terminator in mid.children
    assert mid.children[grid8.terminator].tids == [1]
    assert all(n.tids == [] for n in trie.iter_nodes() if n.children)


def test_mixed_forms_rejected(grid8, five):
    refs = [to_reference(five[0], grid8, "hausdorff"), to_reference(five[1], grid8, "frechet")]
    with pytest.raises(InputError):
        build_trie(refs, "frechet", grid8)
    with pytest.raises(InputError):
        build_trie([], "dtw", grid8)
    with pytest.raises(InputError):
        build_optimized_trie([refs[1]], grid8)
    with pytest.raises(InputError):
        build_optimized_trie([(1, set())], grid8)


# ---------------------------------------------------------------- greedy


def test_eight_sets_greedy():
    stats = GreedyStats()
    trie = build_optimized_trie(EIGHT_SETS.items(), GRID16, stats)
    assert [stats.root_counts[z] for z in range(1, 7)] == [3, 3, 5, 2, 4, 1]
    assert children(trie.root) == [0b0011, 0b0100, 0b0101]

    def under(node):
        return sorted(t for leaf in _leaves(node) for t in leaf.tids)

    assert under(trie.root.children[0b0011]) == [1, 2, 3, 4, 5]
    assert under(trie.root.children[0b0100]) == [6, 7]
    assert under(trie.root.children[0b0101]) == [8]
    # counting work stays within the frequency-subtraction budget
    budget = stats.total_zvals * (trie.depth() + 1) + stats.distinct_cells * trie.node_count()
    assert stats.ops <= budget


def _leaves(node):
    stack = [node]
    while stack:
        n = stack.pop()
        if not n.children:
            yield n
        stack.extend(n.children.values())


def test_one_set_is_a_chain():
    trie = build_optimized_trie([(9, {1, 5, 7, 12})], GRID16)
    assert trie.depth() == 4 and trie.node_count() == 4


zset_collections = st.dictionaries(
    st.integers(0, 1000), st.frozensets(st.integers(0, 63), min_size=1, max_size=8), min_size=1, max_size=25
)


@settings(max_examples=100, deadline=None)
@given(zset_collections)
def test_greedy_paths_cover_input(collection):
    grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
    trie = build_optimized_trie(collection.items(), grid)
    seen = {}
    for leaf, labels in trie.iter_paths():
        assert len(set(labels)) == len(labels)
        for t in leaf.tids:
            seen[t] = frozenset(labels)
    assert seen == collection
    plain_refs = [_set_ref(t, s) for t, s in collection.items()]
    plain = build_trie(plain_refs, "hausdorff", grid)
    assert trie.node_count() <= plain.node_count()


def _set_ref(tid, s):
    from trajtrie.zorder import ReferenceTrajectory

    zs = tuple(sorted(s))
    return ReferenceTrajectory(tid, zs, None, is_set=True)


@pytest.mark.parametrize("measure", MEASURES)
def test_leaf_coverage_and_prefix_property(measure):
    rng = np.random.default_rng(4)
    data = random_dataset(rng, 60, extent=8.0)
    grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
    refs = {t.id: to_reference(t, grid, measure) for t in data}
    trie = build_trie(refs.values(), measure, grid)
    assert sorted(trie.tids()) == sorted(refs)
    for leaf, labels in trie.iter_paths():
        for t in leaf.tids:
            assert labels == refs[t].zvals


# ---------------------------------------------------------------- pivots


def test_pivots_whole_dataset(five):
    ps = select_pivots(five, 5, 3, "hausdorff", seed=42)
    assert sorted(p.id for p in ps.pivots) == [1, 2, 3, 4, 5]


def test_pivots_single_group_is_first_sample(five):
    ps = select_pivots(five, 2, 1, "frechet", seed=3)
    first = pivot_groups(5, 2, 1, 3)[0]
    assert [p.id for p in ps.pivots] == [five[i].id for i in first]


def test_pivots_pick_best_sampled_group():
    rng = np.random.default_rng(0)
    data = random_dataset(rng, 20)
    ps = select_pivots(data, 3, 50, "hausdorff", seed=9)
    scores = []
    for g in pivot_groups(20, 3, 50, 9):
        scores.append(sum(distance(data[i], data[j], "hausdorff") for i, j in itertools.combinations(g, 2)))
    best = pivot_groups(20, 3, 50, 9)[int(np.argmax(scores))]
    assert [p.id for p in ps.pivots] == [data[i].id for i in best]
    assert ps.score == pytest.approx(max(scores))
    again = select_pivots(data, 3, 50, "hausdorff", seed=9)
    assert again == ps


def test_pivot_errors(five):
    with pytest.raises(ConfigurationError):
        select_pivots(five, 6, 3, "hausdorff")
    with pytest.raises(ConfigurationError):
        select_pivots(five, 2, 3, "dtw")
    assert len(select_pivots(five, 0, 3, "frechet")) == 0


# ---------------------------------------------------------------- annotate


def test_annotate_five(grid8, five):
    refs = [to_reference(t, grid8, "hausdorff") for t in five]
    trie = build_trie(refs, "hausdorff", grid8)
    pivots = select_pivots(five, 2, 3, "hausdorff")
    annotate(trie, pivots, {t.id: t for t in five})
    for leaf, _ in trie.iter_paths():
        assert leaf.d_max == 0
    for node in [trie.root, *trie.iter_nodes()]:
        if node.children:
            kids = np.stack([c.hr for c in node.children.values()])
            assert np.array_equal(node.hr[:, 0], kids[:, :, 0].min(axis=0))
            assert np.array_equal(node.hr[:, 1], kids[:, :, 1].max(axis=0))


@pytest.mark.parametrize("measure", ["hausdorff", "frechet"])
def test_annotate_descendant_oracle(measure):
    rng = np.random.default_rng(5)
    data = random_dataset(rng, 50, extent=8.0)
    grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
    byid = {t.id: t for t in data}
    trie = build_trie([to_reference(t, grid, measure) for t in data], measure, grid)
    pivots = select_pivots(data, 3, 5, measure, seed=1)
    annotate(trie, pivots, byid)
    paths = {id(leaf): labels for leaf, labels in trie.iter_paths()}
    for node in [trie.root, *trie.iter_nodes()]:
        for leaf in _leaves(node):
            ref = reference_points(np.array(paths[id(leaf)]), grid)
            for i, p in enumerate(pivots.pivots):
                d = distance(ref, p, measure)
                assert node.hr[i, 0] <= d + 1e-12 and d <= node.hr[i, 1] + 1e-12
            if node is leaf:
                assert leaf.d_max == pytest.approx(max(distance(byid[t], ref, measure) for t in leaf.tids))


def test_annotate_rejects_pivots_for_dtw(grid8, five):
    trie = build_trie([to_reference(t, grid8, "dtw") for t in five], "dtw", grid8)
    with pytest.raises(ConfigurationError):
        annotate(trie, five[:1], {t.id: t for t in five})
    annotate(trie, (), {t.id: t for t in five})
    assert trie.root.hr.shape == (0, 2)


# ---------------------------------------------------------------- succinct


def _annotated(measure, n=40, seed=6, optimize=False, n_p=3):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, n, extent=8.0)
    grid = GridConfig(Point(0.0, 0.0), 8.0, 8)
    refs = [to_reference(t, grid, measure) for t in data]
    trie = build_optimized_trie(refs, grid) if optimize else build_trie(refs, measure, grid)
    pivots = select_pivots(data, n_p, 4, measure) if Measure(measure).is_metric else ()
    return annotate(trie, pivots, {t.id: t for t in data})


@pytest.mark.parametrize("measure", MEASURES)
@pytest.mark.parametrize("dense", [0, 1, 2, 3, 50])
def test_succinct_round_trip(measure, dense):
    trie = _annotated(measure, optimize=measure == "hausdorff" and dense % 2 == 0)
    levels = encode_succinct(trie, dense)
    raw = levels.to_bytes()
    back = decode_succinct(SuccinctLevels.from_bytes(raw))
    assert back.structurally_equal(trie)
    assert encode_succinct(back, dense).to_bytes() == raw


def test_succinct_header_layout():
    trie = _annotated("frechet", n_p=2)
    raw = encode_succinct(trie, 1).to_bytes()
    assert raw[:4] == b"RPTT"
    assert struct.unpack_from("<H", raw, 4) == (1,)
    assert struct.unpack_from("<dddI", raw, 6) == (0.0, 0.0, 8.0, 8)
    assert struct.unpack_from("<BBB", raw, 34) == (1, 2, 1)


def test_single_chain_bitmaps(grid8, five):
    trie = build_trie([to_reference(five[0], grid8, "frechet")], "frechet", grid8)
    annotate(trie, (), {1: five[0]})
    levels = encode_succinct(trie, 2)
    width = grid8.n_cells + 1
    assert len(levels.b_c) == 2 * width
    assert levels.b_c.ones(0, width).size == 1 and levels.b_c.ones(width, 2 * width).size == 1
    assert levels.b_c.count() == 2


def test_eight_sets_root_bitmap():
    trie = build_optimized_trie(EIGHT_SETS.items(), GRID16)
    data = {t: Trajectory(t, reference_points(np.array(sorted(s)), GRID16)) for t, s in EIGHT_SETS.items()}
    annotate(trie, (), data)
    levels = encode_succinct(trie, 1)
    assert levels.b_c.ones().tolist() == [0b0011, 0b0100, 0b0101]
    assert levels.b_l.ones().tolist() == [0b0011, 0b0100, 0b0101]
    assert levels.rank_index[-1] == 3


def test_encode_requires_annotation(grid8, five):
    trie = build_trie([to_reference(five[0], grid8, "frechet")], "frechet", grid8)
    with pytest.raises(ValueError):
        encode_succinct(trie, 1)


def test_corrupt_payloads_raise_format_error():
    trie = _annotated("hausdorff", n=20)
    raw = encode_succinct(trie, 2).to_bytes()
    with pytest.raises(FormatError):
        SuccinctLevels.from_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        SuccinctLevels.from_bytes(raw[:4] + b"\x09\x00" + raw[6:])
    for cut in (3, 10, 40, len(raw) // 2, len(raw) - 1):
        with pytest.raises(FormatError):
            decode_succinct(SuccinctLevels.from_bytes(raw[:cut]))
    with pytest.raises(FormatError):
        SuccinctLevels.from_bytes(raw + b"\x00")


def test_payload_bit_flips_raise_only_format_errors():
    trie = _annotated("frechet", n=15, n_p=2)
    raw = bytearray(encode_succinct(trie, 1).to_bytes())
    rng = np.random.default_rng(0)
    outcomes = {"error": 0, "same": 0, "different": 0}
    for _ in range(300):
        bad = bytearray(raw)
        i = int(rng.integers(len(bad)))
        bad[i] ^= 1 << int(rng.integers(8))
        try:
            back = decode_succinct(SuccinctLevels.from_bytes(bytes(bad)))
        except FormatError:
            outcomes["error"] += 1
            continue
        outcomes["same" if back.structurally_equal(trie) else "different"] += 1
    # the bare payload has no checksum; flips in float fields decode to other values
    assert outcomes["error"] > 0
