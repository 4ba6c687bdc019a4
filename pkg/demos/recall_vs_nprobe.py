"""Sweep n_probe and watch recall climb toward the exhaustive answer.

Probing more clusters per query token retrieves more true candidates and
leaves less to the missing-score imputation. Cost grows linearly with
n_probe; recall saturates well before n_probe reaches K.
"""
import numpy as np

import multivec as mv

col = mv.synth_corpus(seed=42, n_docs=1_000)
queries, _ = mv.synth_queries(col, n_queries=40, seed=43, noise=0.3)

# ground truth: exact nearest document under uncompressed scoring
starts = col.doc_offsets[:-1].astype(np.int64)
truth = []
for query in queries:
    sims = query.vectors @ col.vectors.T
    per_doc = np.maximum.reduceat(sims, starts, axis=1).sum(axis=0)
    truth.append(int(per_doc.argmax()))

print(f"{'b':>3} {'n_probe':>8} {'recall@10':>10} {'tokens scored':>14}")
for b in (2, 4):
    index = mv.build_index(col, mv.IndexConfig(b=b, n_centroids="auto", kmeans_iters=4, seed=0))
    for n_probe in (1, 2, 4, 8, 16, 32, 64, index.n_centroids):
        params = mv.SearchParams(n_probe=n_probe, k=10)
        hits = 0
        cost = 0
        for qi, query in enumerate(queries):
            report = mv.search(index, query, params)
            hits += truth[qi] in report.results.doc_ids.tolist()
            cost += report.counters["tokens_scored"]
        print(f"{b:>3} {n_probe:>8} {hits / len(queries):>10.3f} {cost // len(queries):>14}")
    print()
