"""Build a compressed index from a synthetic corpus and run a few queries.

Walks the full round trip: synthesize embeddings, build, save, reload,
inspect, search, and check the planted document comes back first.
"""
import os
import tempfile

import multivec as mv

col = mv.synth_corpus(seed=3, n_docs=2_000)
print(f"corpus: {col.n_docs} docs, {col.n_tokens} token embeddings of dim {mv.DIM}")

index = mv.build_index(col, mv.IndexConfig(b=4, n_centroids="auto", kmeans_iters=8, seed=0))
sizes = index.cluster_sizes()
print(f"index: K={index.n_centroids} clusters, {index.bytes_per_token} bytes/token, "
      f"cluster sizes {sizes.min()}..{sizes.max()} (median {int(sizes[len(sizes)//2])})")

workdir = tempfile.mkdtemp(prefix="multivec_demo_")
index_dir = os.path.join(workdir, "index")
mv.save_index(index, index_dir)
on_disk = sum(os.path.getsize(os.path.join(index_dir, f)) for f in os.listdir(index_dir))
raw = col.n_tokens * mv.DIM * 4
print(f"saved to {index_dir}: {on_disk} bytes vs {raw} raw float32 "
      f"({raw / on_disk:.1f}x smaller)")

index = mv.load_index(index_dir)

queries, qrels = mv.synth_queries(col, n_queries=5, seed=4)
params = mv.SearchParams(n_probe=32, k=5)
for i, query in enumerate(queries):
    report = mv.search(index, query, params)
    planted = next(iter(qrels[f"q{i}"]))
    print(f"\nq{i} ({query.n_tokens} tokens, planted doc {planted}), "
          f"scored {report.counters['tokens_scored']} candidate tokens:")
    for rank, (doc, score) in enumerate(report.results.pairs(), start=1):
        marker = "  <- planted" if doc == planted else ""
        print(f"  {rank}. doc {doc:>5} score {score:.4f}{marker}")
