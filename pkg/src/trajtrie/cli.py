"""Command-line front end: build, query, scan, bench, gen."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import engine
from .errors import TrajTrieError


def _len_range(text: str):
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None
    return lo, hi


def _emit_hits(qid, result, stats: bool):
    row = {"query": qid, "hits": [[tid, d] for tid, d in result.hits]}
    if stats:
        row["elapsed_s"] = result.elapsed
        row["stats"] = result.totals().as_dict()
        row["per_partition"] = [s.as_dict() for s in result.stats]
    print(json.dumps(row))


def cmd_build(args):
    data = engine.ingest(args.input, min_len=args.min_len, max_len=args.max_len).trajectories
    index = engine.build_index(
        data,
        measure=args.measure,
        requested_delta=args.delta,
        n_partitions=args.partitions,
        n_pivots=args.pivots,
        groups_m=args.pivot_groups,
        strategy=args.strategy,
        optimize_trie=args.optimize_trie,
        seed=args.seed,
        dense_levels=args.dense_levels,
    )
    engine.save_index(index, args.out)
    print(json.dumps({
        "index": args.out,
        "trajectories": len(index.trajectories),
        "partitions": index.n_partitions,
        "nodes": sum(s.node_count() for s in index.shards if s is not None),
    }))


def cmd_query(args):
    index = engine.load_index(args.index)
    for q in engine.read_trajectories(args.query):
        _emit_hits(q.id, engine.query(index, q, args.k), args.stats)


def cmd_scan(args):
    data = engine.ingest(args.input, min_len=args.min_len, max_len=args.max_len).trajectories
    for q in engine.read_trajectories(args.query):
        _emit_hits(q.id, engine.linear_scan(data, q, args.k, args.measure), args.stats)


def cmd_bench(args):
    index = engine.load_index(args.index)
    report = engine.bench(index, engine.read_trajectories(args.queries), args.k, args.repeats)
    print(json.dumps(report, indent=2))


def cmd_gen(args):
    trajs = engine.generate_clustered(
        clusters=args.clusters,
        per_cluster=args.per_cluster,
        len_range=args.len_range,
        seed=args.seed,
        extent=args.extent,
        spread=args.spread,
        step=args.step,
    )
    engine.write_trajectories(args.out, trajs)
    print(json.dumps({"out": args.out, "trajectories": len(trajs)}))


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trajtrie", description="Exact top-k trajectory similarity search.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    measures = ["hausdorff", "frechet", "dtw"]

    def filters(sp):
        sp.add_argument("--min-len", type=int, default=10)
        sp.add_argument("--max-len", type=int, default=1000)

    b = sub.add_parser("build", help="build and save an index")
    b.add_argument("--input", required=True)
    b.add_argument("--measure", choices=measures, default="hausdorff")
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--partitions", type=int, default=64)
    b.add_argument("--pivots", type=int, default=5)
    b.add_argument("--pivot-groups", type=int, default=10)
    b.add_argument("--strategy", choices=["hetero", "homo", "random"], default="hetero")
    b.add_argument("--optimize-trie", action="store_true")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--dense-levels", type=int, default=2)
    b.add_argument("--out", required=True)
    filters(b)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="top-k query against a saved index")
    q.add_argument("--index", required=True)
    q.add_argument("--query", required=True)
    q.add_argument("--k", type=int, default=100)
    q.add_argument("--stats", action="store_true")
    q.set_defaults(func=cmd_query)

    s = sub.add_parser("scan", help="brute-force top-k over a trajectory file")
    s.add_argument("--input", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--k", type=int, default=100)
    s.add_argument("--measure", choices=measures, default="hausdorff")
    s.add_argument("--stats", action="store_true")
    filters(s)
    s.set_defaults(func=cmd_scan)

    be = sub.add_parser("bench", help="time queries against the index and a linear scan")
    be.add_argument("--index", required=True)
    be.add_argument("--queries", required=True)
    be.add_argument("--k", type=int, default=100)
    be.add_argument("--repeats", type=int, default=20)
    be.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="write a clustered synthetic dataset")
    g.add_argument("--clusters", type=int, default=50)
    g.add_argument("--per-cluster", type=int, default=100)
    g.add_argument("--len-range", type=_len_range, default=(10, 50))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--extent", type=float, default=100.0)
    g.add_argument("--spread", type=float, default=0.5)
    g.add_argument("--step", type=float, default=0.4)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (TrajTrieError, OSError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
