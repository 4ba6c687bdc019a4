"""Command-line interface: index, search, eval, inspect, bench.

Run files are TSV rows "qid<TAB>docid<TAB>rank<TAB>score" with 1-based
ranks and scores printed to six decimals. Query ids are q0, q1, ... in
query-file order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import corpus, engine, indexer, metrics
from .errors import FormatError
from .probing import SearchParams


def _int_or_auto(value: str) -> int | str:
    if value == "auto":
        return "auto"
    return int(value)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multivec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build a compressed index from a collection file")
    p.add_argument("--collection", required=True)
    p.add_argument("--out", required=True, help="index directory to create")
    p.add_argument("--b", type=int, default=4, choices=(2, 4), help="bits per dimension")
    p.add_argument("--n-centroids", type=_int_or_auto, default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmeans-iters", type=int, default=20)
    p.add_argument("--sample-factor", type=int, default=16)

    p = sub.add_parser("search", help="run queries against an index, write a run file")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True, help="run file to write")
    p.add_argument("--n-probe", type=int, default=32)
    p.add_argument("--t-prime", type=_int_or_auto, default="auto")
    p.add_argument("--t-prime-max", type=int, default=100_000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--recall-k", type=int, nargs="+", default=[10, 100])

    p = sub.add_parser("inspect", help="print index statistics")
    p.add_argument("--index", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="time searches at varying n_probe and threads")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--n-probe", type=int, nargs="+", default=[32])
    p.add_argument("--threads", type=int, nargs="+", default=[1])
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=3)
    return parser


def _cmd_index(args: argparse.Namespace) -> int:
    collection = corpus.load_collection(args.collection)
    config = indexer.IndexConfig(
        b=args.b,
        n_centroids=args.n_centroids,
        kmeans_iters=args.kmeans_iters,
        seed=args.seed,
        sample_factor=args.sample_factor,
    )
    index = indexer.build_index(collection, config)
    indexer.save_index(index, args.out)
    print(
        f"indexed {index.n_tokens} tokens from {index.n_docs} docs into "
        f"{index.n_centroids} clusters at {index.bytes_per_token} bytes/token"
    )
    return 0


def _search_params(args: argparse.Namespace) -> SearchParams:
    return SearchParams(
        n_probe=args.n_probe,
        t_prime=args.t_prime,
        t_prime_max=args.t_prime_max,
        k=args.k,
        threads=args.threads,
    )


def _cmd_search(args: argparse.Namespace) -> int:
    index = indexer.load_index(args.index)
    queries = corpus.load_queries(args.queries)
    reports = engine.search_batch(index, queries, _search_params(args))
    with open(args.out, "w", encoding="utf-8") as f:
        for i, report in enumerate(reports):
            for rank, (doc, score) in enumerate(report.results.pairs(), start=1):
                f.write(f"q{i}\t{doc}\t{rank}\t{score:.6f}\n")
    total = sum(sum(r.timings.values()) for r in reports)
    print(f"searched {len(queries)} queries in {total * 1e3:.1f} ms, run written to {args.out}")
    return 0


def _load_run(path: str) -> dict[str, list[tuple[int, float]]]:
    run: dict[str, list[tuple[int, float]]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise FormatError(f"{path}:{line_no}: expected 4 tab-separated fields")
            qid, doc_str, rank_str, score_str = parts
            rows = run.setdefault(qid, [])
            if int(rank_str) != len(rows) + 1:
                raise FormatError(f"{path}:{line_no}: ranks must count up from 1 per query")
            rows.append((int(doc_str), float(score_str)))
    return run


def _cmd_eval(args: argparse.Namespace) -> int:
    run = _load_run(args.run)
    qrels = corpus.load_qrels(args.qrels)
    result = metrics.evaluate(run, qrels, recall_cutoffs=tuple(args.recall_k))
    print(f"queries evaluated: {result.n_queries}")
    for name in sorted(result.mean):
        print(f"{name:>12}: {result.mean[name]:.4f}")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    index = indexer.load_index(args.index)
    sizes = index.cluster_sizes()
    files = ["meta.json", "centroids.f32", "buckets.f32", "cluster_offsets.u64",
             "codes.bin", "doc_ids.u32"]
    total_bytes = sum(os.path.getsize(os.path.join(args.index, name)) for name in files)
    stats = {
        "b": index.b,
        "n_centroids": index.n_centroids,
        "n_docs": index.n_docs,
        "n_tokens": index.n_tokens,
        "bytes_per_token": index.bytes_per_token,
        "total_bytes": total_bytes,
        "cluster_sizes": {
            "min": int(sizes.min()),
            "p25": int(np.percentile(sizes, 25)),
            "median": int(np.median(sizes)),
            "p75": int(np.percentile(sizes, 75)),
            "max": int(sizes.max()),
            "empty": int((sizes == 0).sum()),
        },
    }
    if args.json:
        print(json.dumps(stats, indent=1, sort_keys=True))
    else:
        print(f"index {args.index}: b={index.b}, K={index.n_centroids}, "
              f"{index.n_docs} docs, {index.n_tokens} tokens")
        print(f"residual codes: {index.bytes_per_token} bytes/token, "
              f"{total_bytes} bytes total on disk")
        c = stats["cluster_sizes"]
        print(f"cluster sizes: min={c['min']} p25={c['p25']} median={c['median']} "
              f"p75={c['p75']} max={c['max']} empty={c['empty']}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    index = indexer.load_index(args.index)
    queries = corpus.load_queries(args.queries)
    print(f"{'n_probe':>8} {'threads':>8} {'mean_ms':>9} {'plan_ms':>9} "
          f"{'score_ms':>9} {'reduce_ms':>10}")
    for n_probe in args.n_probe:
        for threads in args.threads:
            params = SearchParams(n_probe=n_probe, threads=threads, k=args.k)
            laps = []
            stages = np.zeros(3)
            for _ in range(args.repeats):
                start = time.perf_counter()
                reports = engine.search_batch(index, queries, params)
                laps.append((time.perf_counter() - start) / len(queries))
                stages += [
                    np.mean([r.timings["candidate_generation"] for r in reports]),
                    np.mean([r.timings["scoring"] for r in reports]),
                    np.mean([r.timings["reduction"] for r in reports]),
                ]
            stages /= args.repeats
            print(f"{n_probe:>8} {threads:>8} {np.mean(laps) * 1e3:>9.2f} "
                  f"{stages[0] * 1e3:>9.2f} {stages[1] * 1e3:>9.2f} {stages[2] * 1e3:>10.2f}")
    return 0


_COMMANDS = {
    "index": _cmd_index,
    "search": _cmd_search,
    "eval": _cmd_eval,
    "inspect": _cmd_inspect,
    "bench": _cmd_bench,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
