"""End-to-end retrieval: plan, score probed clusters, reduce, select.

The scoring stage is fused per query token: all of a token's probed
cluster runs are gathered at once, scored through the byte tables, and
collapsed to one stride. With threads > 1 tokens are scored on a thread
pool; results are gathered in token order, so the output is identical
for any thread count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import QueryEmbeddings
from .indexer import CompressedIndex
from .kernel import Stride, _max_per_doc, _residual_sums, build_upsilon, byte_tables
from .probing import SearchParams, plan as build_plan
from .reduction import RankedResults, reduce_document_level, top_k


@dataclass
class SearchReport:
    """Results plus stage timings (seconds) and work counters."""

    results: RankedResults
    timings: dict[str, float]
    counters: dict[str, int]


def _query_vectors(query: QueryEmbeddings | np.ndarray) -> np.ndarray:
    if isinstance(query, QueryEmbeddings):
        return query.vectors
    return np.asarray(query, dtype=np.float32)


def _score_token(
    index: CompressedIndex,
    tables_row: np.ndarray,
    probe_ids: np.ndarray,
    probe_scores: np.ndarray,
) -> Stride:
    """One token's stride over all its probed clusters."""
    off = index.cluster_offsets
    sizes = off[probe_ids + 1] - off[probe_ids]
    live = sizes > 0
    if not live.any():
        return Stride.empty()
    clusters = probe_ids[live]
    starts = off[clusters]
    lengths = sizes[live]
    rows = np.repeat(starts, lengths) + _run_offsets(lengths)
    scores = _residual_sums(tables_row, index.codes[rows])
    scores += np.repeat(probe_scores[live], lengths)
    return _max_per_doc(index.doc_ids[rows], scores)


def _run_offsets(lengths: np.ndarray) -> np.ndarray:
    """[0..l0), [0..l1), ... concatenated."""
    total = int(lengths.sum())
    out = np.arange(total, dtype=np.int64)
    run_starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    return out - np.repeat(run_starts, lengths)


def search(
    index: CompressedIndex,
    query: QueryEmbeddings | np.ndarray,
    params: SearchParams,
) -> SearchReport:
    """Retrieve the top params.k documents for one query."""
    q = _query_vectors(query)
    t0 = time.perf_counter()
    probe_plan = build_plan(q, index, params)
    t1 = time.perf_counter()
    upsilon = build_upsilon(q, index.buckets)
    tables = byte_tables(upsilon, index.b)
    n_tokens = q.shape[0]
    if params.threads > 1 and n_tokens > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            token_strides = list(
                pool.map(
                    lambda i: _score_token(
                        index, tables[i], probe_plan.probe_ids[i], probe_plan.probe_scores[i]
                    ),
                    range(n_tokens),
                )
            )
    else:
        token_strides = [
            _score_token(index, tables[i], probe_plan.probe_ids[i], probe_plan.probe_scores[i])
            for i in range(n_tokens)
        ]
    t2 = time.perf_counter()
    document_stride = reduce_document_level(token_strides, probe_plan.prefix)
    results = top_k(document_stride, params.k)
    t3 = time.perf_counter()

    sizes = index.cluster_sizes()
    return SearchReport(
        results=results,
        timings={
            "candidate_generation": t1 - t0,
            "scoring": t2 - t1,
            "reduction": t3 - t2,
        },
        counters={
            "centroid_scores": n_tokens * index.n_centroids,
            "tokens_scored": int(sizes[probe_plan.probe_ids].sum()),
        },
    )


def search_batch(
    index: CompressedIndex,
    queries: list[QueryEmbeddings],
    params: SearchParams,
) -> list[SearchReport]:
    """search() per query, in order."""
    return [search(index, q, params) for q in queries]
