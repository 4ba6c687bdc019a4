"""Show sqrt cost scaling across corpus sizes and thread invariance.

The candidate-generation threshold t' and the auto centroid count both
track sqrt(n_tokens), so quadrupling the corpus should roughly double the
tokens scored per query, not quadruple them. Thread count changes timing
only; results are required to be identical.
"""
import time

import numpy as np

import multivec as mv

rng = np.random.default_rng(1)
query = rng.standard_normal((16, mv.DIM)).astype(np.float32)
query /= np.linalg.norm(query, axis=1, keepdims=True)

print(f"{'docs':>7} {'tokens':>8} {'K':>6} {'t_prime':>8} {'tokens scored':>14} {'growth':>7}")
previous = None
for n_docs in (1_000, 4_000, 16_000):
    col = mv.synth_corpus(seed=7, n_docs=n_docs)
    index = mv.build_index(col, mv.IndexConfig(n_centroids="auto", kmeans_iters=4, seed=0))
    report = mv.search(index, query, mv.SearchParams(n_probe=32, k=10))
    cost = report.counters["tokens_scored"]
    growth = f"{cost / previous:.2f}x" if previous else "-"
    print(f"{n_docs:>7} {col.n_tokens:>8} {index.n_centroids:>6} "
          f"{mv.compute_tprime(col.n_tokens):>8} {cost:>14} {growth:>7}")
    previous = cost

col = mv.synth_corpus(seed=7, n_docs=16_000)
index = mv.build_index(col, mv.IndexConfig(n_centroids="auto", kmeans_iters=4, seed=0))
queries, _ = mv.synth_queries(col, n_queries=20, seed=8)

print(f"\nthread sweep over {len(queries)} queries (n_probe=32):")
print(f"{'threads':>8} {'total_ms':>9} {'identical':>10}")
reference = None
for threads in (1, 2, 4, 8):
    params = mv.SearchParams(n_probe=32, k=10, threads=threads)
    t0 = time.perf_counter()
    reports = mv.search_batch(index, queries, params)
    elapsed = (time.perf_counter() - t0) * 1e3
    ranking = [r.results.pairs() for r in reports]
    if reference is None:
        reference = ranking
        same = "baseline"
    else:
        same = "yes" if ranking == reference else "NO"
    print(f"{threads:>8} {elapsed:>9.1f} {same:>10}")
