"""Index construction: centroid training, residual quantization, storage.

A compressed index holds K unit centroids, shared scalar bucket weights,
and per-cluster runs of (packed residual codes, doc id) aligned token
entries. Cluster runs are CSR-style: cluster c owns rows
cluster_offsets[c]:cluster_offsets[c+1], sorted by doc id.

Index directory layout:
    meta.json            version, b, n_centroids, n_docs, n_tokens, build echo
    centroids.f32        K x 128 float32 LE
    buckets.f32          2^b - 1 boundaries then 2^b representatives, float32 LE
    cluster_offsets.u64  K + 1 uint64 LE
    codes.bin            n_tokens x 16*b packed bytes
    doc_ids.u32          n_tokens uint32 LE
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .corpus import DIM, EmbeddingCollection
from .errors import (
    DegenerateSampleError,
    FormatError,
    NormError,
    OffsetError,
    SizeMismatchError,
    UnsupportedVersionError,
)
from .packing import pack_codes, unpack_codes

_ASSIGN_CHUNK = 8192


@dataclass(frozen=True)
class IndexConfig:
    """Build parameters. n_centroids is an explicit count or "auto"
    (power of two nearest 16 * sqrt(n_tokens), clamped to [1, n_tokens])."""

    b: int = 4
    n_centroids: int | str = "auto"
    kmeans_iters: int = 20
    seed: int = 0
    sample_factor: int = 16

    def validate(self) -> None:
        if self.b not in (2, 4):
            raise ValueError(f"b must be 2 or 4, got {self.b}")
        if self.n_centroids != "auto":
            if not isinstance(self.n_centroids, int) or self.n_centroids < 1:
                raise ValueError(f"n_centroids must be 'auto' or a positive int")
        if self.kmeans_iters < 0 or self.sample_factor < 1:
            raise ValueError("kmeans_iters must be >= 0 and sample_factor >= 1")


@dataclass(frozen=True)
class BucketWeights:
    """Scalar quantization grid shared by all 128 dimensions.

    boundaries: 2^b - 1 strictly ascending bucket edges.
    representatives: 2^b non-decreasing reconstruction values, one per bucket.
    """

    b: int
    boundaries: np.ndarray
    representatives: np.ndarray

    def validate(self) -> None:
        n_buckets = 1 << self.b
        if self.b not in (2, 4):
            raise ValueError(f"b must be 2 or 4, got {self.b}")
        if self.boundaries.shape != (n_buckets - 1,):
            raise ValueError(f"expected {n_buckets - 1} boundaries, got {self.boundaries.shape}")
        if self.representatives.shape != (n_buckets,):
            raise ValueError(f"expected {n_buckets} representatives")
        if not np.all(np.diff(self.boundaries) > 0):
            raise DegenerateSampleError("bucket boundaries must be strictly ascending")
        if not np.all(np.diff(self.representatives) >= 0):
            raise DegenerateSampleError("bucket representatives must be non-decreasing")


@dataclass
class CompressedIndex:
    b: int
    n_docs: int
    centroids: np.ndarray
    buckets: BucketWeights
    cluster_offsets: np.ndarray
    codes: np.ndarray
    doc_ids: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.doc_ids.shape[0]

    @property
    def bytes_per_token(self) -> int:
        return self.codes.shape[1]

    def cluster_sizes(self) -> np.ndarray:
        return np.diff(self.cluster_offsets)

    def validate(self) -> None:
        self.buckets.validate()
        if self.b != self.buckets.b:
            raise FormatError(f"index b={self.b} disagrees with buckets b={self.buckets.b}")
        if self.centroids.ndim != 2 or self.centroids.shape[1] != DIM:
            raise FormatError(f"centroids must be (K, {DIM}), got {self.centroids.shape}")
        norms = np.linalg.norm(self.centroids, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-3):
            raise NormError("centroid rows must be unit length")
        k = self.n_centroids
        off = self.cluster_offsets
        if off.shape != (k + 1,) or off[0] != 0 or off[-1] != self.n_tokens:
            raise OffsetError("cluster_offsets must run from 0 to n_tokens with K+1 entries")
        if np.any(np.diff(off) < 0):
            raise OffsetError("cluster_offsets must be non-decreasing")
        if self.codes.shape != (self.n_tokens, 16 * self.b):
            raise SizeMismatchError(
                f"codes must be (n_tokens, {16 * self.b}), got {self.codes.shape}"
            )
        if self.doc_ids.size and int(self.doc_ids.max()) >= self.n_docs:
            raise FormatError("doc_ids reference documents beyond n_docs")
        # doc ids ascend within each cluster; descents are legal only at run starts
        if self.n_tokens > 1:
            descents = np.flatnonzero(np.diff(self.doc_ids.astype(np.int64)) < 0) + 1
            if not np.isin(descents, off).all():
                raise FormatError("doc_ids must ascend within each cluster run")


def resolve_n_centroids(n_centroids: int | str, n_tokens: int, sample_factor: int = 16) -> int:
    if n_centroids == "auto":
        k = 1 << round(math.log2(sample_factor * math.sqrt(n_tokens)))
        return max(1, min(k, n_tokens))
    return int(n_centroids)


def sample_training_set(
    collection: EmbeddingCollection, seed: int, sample_factor: int = 16
) -> np.ndarray:
    """Token vectors of ceil(sqrt(n_docs) * sample_factor) documents,
    sampled uniformly without replacement (capped at n_docs)."""
    n_docs = collection.n_docs
    n_sample = min(math.ceil(math.sqrt(n_docs) * sample_factor), n_docs)
    rng = np.random.default_rng(seed)
    doc_ids = np.sort(rng.choice(n_docs, size=n_sample, replace=False))
    rows = [collection.doc_tokens(int(d)) for d in doc_ids]
    return np.concatenate(rows, axis=0)


def _assign(vectors: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Argmax-cosine cluster per row (ties: lowest id) and that best score."""
    n = vectors.shape[0]
    assign = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float32)
    for start in range(0, n, _ASSIGN_CHUNK):
        stop = min(start + _ASSIGN_CHUNK, n)
        sims = vectors[start:stop] @ centroids.T
        assign[start:stop] = np.argmax(sims, axis=1)
        best[start:stop] = sims[np.arange(stop - start), assign[start:stop]]
    return assign, best


def train_centroids(sample: np.ndarray, n_centroids: int, iters: int, seed: int) -> np.ndarray:
    """Spherical k-means over unit vectors.

    Seeding is k-means++ (squared chord distance 2 - 2*cos). Each
    iteration assigns by argmax cosine, recomputes cluster means, and
    renormalizes; a cluster left empty (or with a vanishing mean) is
    re-seeded to the sample point farthest from its assigned centroid.
    """
    m = sample.shape[0]
    if not 1 <= n_centroids <= m:
        raise ValueError(f"n_centroids must be in [1, {m}], got {n_centroids}")
    rng = np.random.default_rng(seed)
    sample = np.ascontiguousarray(sample, dtype=np.float32)

    centroids = np.empty((n_centroids, DIM), dtype=np.float32)
    centroids[0] = sample[int(rng.integers(m))]
    best_sim = sample @ centroids[0]
    for k in range(1, n_centroids):
        d2 = np.maximum(2.0 - 2.0 * best_sim.astype(np.float64), 0.0)
        total = d2.sum()
        if total <= 0.0:
            pick = int(rng.integers(m))
        else:
            u = rng.random() * total
            pick = min(int(np.searchsorted(np.cumsum(d2), u, side="right")), m - 1)
        centroids[k] = sample[pick]
        np.maximum(best_sim, sample @ centroids[k], out=best_sim)

    for _ in range(iters):
        assign, best = _assign(sample, centroids)
        counts = np.bincount(assign, minlength=n_centroids)
        sums = np.empty((n_centroids, DIM), dtype=np.float64)
        for d in range(DIM):
            sums[:, d] = np.bincount(assign, weights=sample[:, d], minlength=n_centroids)
        norms = np.linalg.norm(sums, axis=1)
        bad = (counts == 0) | (norms < 1e-12)
        norms[bad] = 1.0
        centroids = (sums / norms[:, None]).astype(np.float32)
        if bad.any():
            worst = np.argsort(best, kind="stable")[: int(bad.sum())]
            centroids[np.flatnonzero(bad)] = sample[worst]
        centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    return centroids


def compute_bucket_weights(residual_sample: np.ndarray, b: int) -> BucketWeights:
    """Quantile grid over a pooled 1-D residual sample.

    Boundaries sit at quantiles i/2^b (i = 1..2^b-1); representatives at
    (i+0.5)/2^b (i = 0..2^b-1), linearly interpolated between order
    statistics. Values outside the boundary range clamp to the extreme
    buckets at quantization time.
    """
    if b not in (2, 4):
        raise ValueError(f"b must be 2 or 4, got {b}")
    flat = np.asarray(residual_sample, dtype=np.float64).ravel()
    n_buckets = 1 << b
    if flat.size < 2:
        raise DegenerateSampleError("residual sample must hold at least two values")
    edges = np.arange(1, n_buckets) / n_buckets
    mids = (np.arange(n_buckets) + 0.5) / n_buckets
    boundaries = np.quantile(flat, edges).astype(np.float32)
    representatives = np.quantile(flat, mids).astype(np.float32)
    weights = BucketWeights(b=b, boundaries=boundaries, representatives=representatives)
    weights.validate()
    return weights


def _flat_bucket_weights(value: float, b: int) -> BucketWeights:
    """Grid for residual samples with no spread: every bucket reconstructs
    the constant value, boundaries straddle it by a hair."""
    n_buckets = 1 << b
    step = max(1e-4, abs(value) * 1e-4)
    offsets = np.arange(1, n_buckets) - n_buckets // 2
    return BucketWeights(
        b=b,
        boundaries=(value + step * offsets).astype(np.float32),
        representatives=np.full(n_buckets, value, dtype=np.float32),
    )


def quantize_residuals(residuals: np.ndarray, weights: BucketWeights) -> np.ndarray:
    """Bucket index per element: values below the first boundary code to 0,
    values at or above the last code to 2^b - 1."""
    return np.searchsorted(weights.boundaries, residuals, side="right").astype(np.uint8)


def assign_and_compress(
    collection: EmbeddingCollection,
    centroids: np.ndarray,
    weights: BucketWeights,
) -> CompressedIndex:
    """Assign every token to its argmax-cosine centroid and pack residuals.

    Output rows are grouped by cluster, sorted by doc id within each
    cluster (original token position breaks ties), so parallel builds
    would serialize to the same bytes.
    """
    n_tokens = collection.n_tokens
    n_centroids = centroids.shape[0]
    doc_of = np.repeat(
        np.arange(collection.n_docs, dtype=np.uint32), collection.doc_lengths()
    )
    assign = np.empty(n_tokens, dtype=np.int64)
    packed = np.empty((n_tokens, 16 * weights.b), dtype=np.uint8)
    for start in range(0, n_tokens, _ASSIGN_CHUNK):
        stop = min(start + _ASSIGN_CHUNK, n_tokens)
        sims = collection.vectors[start:stop] @ centroids.T
        assign[start:stop] = np.argmax(sims, axis=1)
        residuals = collection.vectors[start:stop] - centroids[assign[start:stop]]
        packed[start:stop] = pack_codes(quantize_residuals(residuals, weights), weights.b)

    order = np.lexsort((np.arange(n_tokens), doc_of, assign))
    offsets = np.zeros(n_centroids + 1, dtype=np.int64)
    np.cumsum(np.bincount(assign, minlength=n_centroids), out=offsets[1:])
    return CompressedIndex(
        b=weights.b,
        n_docs=collection.n_docs,
        centroids=np.ascontiguousarray(centroids, dtype=np.float32),
        buckets=weights,
        cluster_offsets=offsets,
        codes=packed[order],
        doc_ids=doc_of[order],
    )


def decompress_explicit(index: CompressedIndex, cluster_id: int, position: int) -> np.ndarray:
    """Reconstruct one token: centroid plus per-dimension representatives."""
    start, stop = index.cluster_offsets[cluster_id], index.cluster_offsets[cluster_id + 1]
    if not 0 <= position < stop - start:
        raise IndexError(f"position {position} outside cluster of size {stop - start}")
    codes = unpack_codes(index.codes[start + position], index.b)
    return index.centroids[cluster_id] + index.buckets.representatives[codes]


def decompress_cluster(index: CompressedIndex, cluster_id: int) -> np.ndarray:
    """Reconstruct every token of a cluster, one row each."""
    start, stop = index.cluster_offsets[cluster_id], index.cluster_offsets[cluster_id + 1]
    codes = unpack_codes(index.codes[start:stop], index.b)
    return index.centroids[cluster_id] + index.buckets.representatives[codes]


def build_index(collection: EmbeddingCollection, config: IndexConfig) -> CompressedIndex:
    """Sample, train centroids, fit buckets on sample residuals, compress.

    Bucket statistics come from the training sample's residuals only;
    the full collection is touched once, during compression.
    """
    config.validate()
    n_centroids = resolve_n_centroids(
        config.n_centroids, collection.n_tokens, config.sample_factor
    )
    if n_centroids > collection.n_tokens:
        raise ValueError(f"n_centroids={n_centroids} exceeds n_tokens={collection.n_tokens}")
    sample = sample_training_set(collection, config.seed, config.sample_factor)
    centroids = train_centroids(sample, n_centroids, config.kmeans_iters, config.seed)
    sample_assign, _ = _assign(sample, centroids)
    residuals = sample - centroids[sample_assign]
    try:
        weights = compute_bucket_weights(residuals.ravel(), config.b)
    except DegenerateSampleError:
        # spread-free residuals (e.g. a one-token collection whose centroid
        # is the token itself) still deserve a working index
        weights = _flat_bucket_weights(float(np.median(residuals)), config.b)
    index = assign_and_compress(collection, centroids, weights)
    index.meta = {
        "seed": config.seed,
        "kmeans_iters": config.kmeans_iters,
        "sample_factor": config.sample_factor,
        "n_centroids_config": config.n_centroids,
    }
    return index


def save_index(index: CompressedIndex, directory: str) -> None:
    index.validate()
    os.makedirs(directory, exist_ok=True)
    meta = {
        "version": 1,
        "b": index.b,
        "n_centroids": index.n_centroids,
        "n_docs": index.n_docs,
        "n_tokens": index.n_tokens,
        **index.meta,
    }
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
    buckets = np.concatenate([index.buckets.boundaries, index.buckets.representatives])
    _write(directory, "centroids.f32", index.centroids.astype("<f4"))
    _write(directory, "buckets.f32", buckets.astype("<f4"))
    _write(directory, "cluster_offsets.u64", index.cluster_offsets.astype("<u8"))
    _write(directory, "codes.bin", index.codes)
    _write(directory, "doc_ids.u32", index.doc_ids.astype("<u4"))


def _write(directory: str, name: str, arr: np.ndarray) -> None:
    with open(os.path.join(directory, name), "wb") as f:
        f.write(np.ascontiguousarray(arr).tobytes())


def _read(directory: str, name: str, dtype: str, count: int) -> np.ndarray:
    path = os.path.join(directory, name)
    data = np.fromfile(path, dtype=dtype)
    if data.size != count:
        raise SizeMismatchError(f"{path}: {data.size} items, metadata implies {count}")
    return data


def load_index(directory: str) -> CompressedIndex:
    meta_path = os.path.join(directory, "meta.json")
    with open(meta_path, "r", encoding="utf-8") as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{meta_path}: invalid JSON") from exc
    if meta.get("version") != 1:
        raise UnsupportedVersionError(f"{meta_path}: version {meta.get('version')}, expected 1")
    b = meta.get("b")
    if b not in (2, 4):
        raise FormatError(f"{meta_path}: b must be 2 or 4, got {b}")
    k, n_docs, n_tokens = meta["n_centroids"], meta["n_docs"], meta["n_tokens"]
    n_buckets = 1 << b
    centroids = _read(directory, "centroids.f32", "<f4", k * DIM).reshape(k, DIM)
    buckets_flat = _read(directory, "buckets.f32", "<f4", 2 * n_buckets - 1)
    offsets = _read(directory, "cluster_offsets.u64", "<u8", k + 1).astype(np.int64)
    codes = _read(directory, "codes.bin", np.uint8, n_tokens * 16 * b).reshape(n_tokens, 16 * b)
    doc_ids = _read(directory, "doc_ids.u32", "<u4", n_tokens).astype(np.uint32)
    weights = BucketWeights(
        b=b,
        boundaries=buckets_flat[: n_buckets - 1].astype(np.float32),
        representatives=buckets_flat[n_buckets - 1 :].astype(np.float32),
    )
    extra_keys = set(meta) - {"version", "b", "n_centroids", "n_docs", "n_tokens"}
    index = CompressedIndex(
        b=b,
        n_docs=n_docs,
        centroids=centroids.astype(np.float32),
        buckets=weights,
        cluster_offsets=offsets,
        codes=codes,
        doc_ids=doc_ids,
        meta={key: meta[key] for key in sorted(extra_keys)},
    )
    index.validate()
    return index
