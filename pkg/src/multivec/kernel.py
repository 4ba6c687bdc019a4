"""Selective-sum scoring of compressed clusters, no decompression.

build_upsilon multiplies once per (token, dimension, bucket): entry
[i, d, w] = q[i, d] * representative[w]. After that, scoring a
candidate is pure table lookups and additions -- the candidate's packed
codes pick entries out of per-token tables and the centroid score is
added on top. Reconstruction of token vectors never happens on this
path; decompress_explicit exists for oracles and debugging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .indexer import BucketWeights, CompressedIndex
from .packing import unpack_codes


@dataclass
class Stride:
    """Sorted-unique (doc id, partial score) pairs, the unit of reduction."""

    keys: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.keys.shape[0]

    @classmethod
    def empty(cls) -> "Stride":
        return cls(np.empty(0, dtype=np.uint32), np.empty(0, dtype=np.float32))

    def validate(self) -> None:
        if self.keys.shape != self.values.shape:
            raise ValueError("keys and values must align")
        if len(self) > 1 and not np.all(np.diff(self.keys.astype(np.int64)) > 0):
            raise ValueError("keys must be strictly ascending")


def build_upsilon(query_vectors: np.ndarray, weights: BucketWeights) -> np.ndarray:
    """(n_tokens, 128, 2^b) partial-score table, one multiplication per entry."""
    q = np.asarray(query_vectors, dtype=np.float32)
    return q[:, :, None] * weights.representatives[None, None, :]


def byte_tables(upsilon: np.ndarray, b: int) -> np.ndarray:
    """Fold upsilon into per-byte lookup tables, additions only.

    Entry [i, p, w] is the sum of the 8//b per-dimension upsilon entries
    that byte value w encodes at packed byte position p, so a candidate's
    residual sum becomes one lookup per stored byte.
    """
    w = np.arange(256, dtype=np.int64)
    if b == 4:
        return upsilon[:, 0::2, w & 15] + upsilon[:, 1::2, w >> 4]
    if b == 2:
        return (
            (upsilon[:, 0::4, w & 3] + upsilon[:, 1::4, (w >> 2) & 3])
            + (upsilon[:, 2::4, (w >> 4) & 3] + upsilon[:, 3::4, w >> 6])
        )
    raise ValueError(f"b must be 2 or 4, got {b}")


def _residual_sums(token_table: np.ndarray, packed_rows: np.ndarray) -> np.ndarray:
    """Per-row sum of byte-table lookups; float32 throughout."""
    n_pos = token_table.shape[0]
    gathered = token_table[np.arange(n_pos)[None, :], packed_rows]
    return gathered.sum(axis=1, dtype=np.float32)


def _max_per_doc(doc_ids: np.ndarray, scores: np.ndarray) -> Stride:
    """Collapse (doc, score) pairs to one max per doc; doc_ids may repeat."""
    if doc_ids.size == 0:
        return Stride.empty()
    order = np.argsort(doc_ids, kind="stable")
    sorted_ids = doc_ids[order]
    starts = np.flatnonzero(np.concatenate(([True], sorted_ids[1:] != sorted_ids[:-1])))
    return Stride(sorted_ids[starts], np.maximum.reduceat(scores[order], starts))


def score_cluster(
    index: CompressedIndex,
    cluster_id: int,
    token_id: int,
    centroid_score: float,
    upsilon: np.ndarray,
) -> Stride:
    """Score one cluster's tokens against one query token.

    Every stored token scores centroid_score plus its residual sum read
    out of the lookup tables; consecutive entries of the same document
    collapse to their maximum, which is safe because cluster runs are
    sorted by doc id.
    """
    start, stop = index.cluster_offsets[cluster_id], index.cluster_offsets[cluster_id + 1]
    if start == stop:
        return Stride.empty()
    tables = byte_tables(upsilon[token_id : token_id + 1], index.b)[0]
    scores = _residual_sums(tables, index.codes[start:stop])
    scores += np.float32(centroid_score)
    return _max_per_doc(index.doc_ids[start:stop], scores)


@dataclass
class OpCount:
    """Arithmetic audit for the instrumented scoring path."""

    additions: int = 0
    multiplications: int = 0
    lookups: int = 0


def score_cluster_instrumented(
    index: CompressedIndex,
    cluster_id: int,
    token_id: int,
    centroid_score: float,
    upsilon: np.ndarray,
) -> tuple[Stride, OpCount]:
    """Scalar reference for score_cluster that counts per-candidate ops.

    Walks the per-dimension upsilon entries one by one so the audit
    reflects the selective sum exactly: 128 lookups and 128 additions
    per candidate (plus the centroid-score addition), zero
    multiplications.
    """
    count = OpCount()
    start, stop = index.cluster_offsets[cluster_id], index.cluster_offsets[cluster_id + 1]
    table = upsilon[token_id]
    doc_ids = []
    scores = []
    for row in range(start, stop):
        codes = unpack_codes(index.codes[row], index.b)
        acc = np.float32(centroid_score)
        for d in range(codes.shape[0]):
            entry = table[d, codes[d]]
            count.lookups += 1
            acc = np.float32(acc + entry)
            count.additions += 1
        doc_ids.append(int(index.doc_ids[row]))
        scores.append(acc)
    stride = _max_per_doc(
        np.asarray(doc_ids, dtype=np.uint32), np.asarray(scores, dtype=np.float32)
    )
    return stride, count
