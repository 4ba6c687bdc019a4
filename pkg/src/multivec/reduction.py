"""Two-stage stride reduction and top-k selection.

Token level merges a token's per-cluster strides by maximum. Document
level sums the per-token strides into final scores, imputing the
missing-score estimate for every token where a document was never
retrieved. The imputation for a run of absent tokens i..j is the single
float32 prefix difference prefix[j+1] - prefix[i].

Summation is canonical: each document's contributions are folded left to
right in token order (present value, or one chunk per maximal absent
run), in float32. The pairwise merge tree therefore only determines how
key sets are united, and any tree shape produces bit-identical strides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .indexer import CompressedIndex, decompress_cluster
from .kernel import Stride
from .probing import ProbePlan


@dataclass
class RankedResults:
    """Doc ids in descending score order; ties ordered by ascending id."""

    doc_ids: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return self.doc_ids.shape[0]

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(d), float(s)) for d, s in zip(self.doc_ids, self.scores)]


def reduce_token_level(strides: list[Stride]) -> Stride:
    """Merge one token's cluster strides, keeping each doc's maximum.

    Maximum is exact, so this equals any pairwise merge order.
    """
    live = [s for s in strides if len(s)]
    if not live:
        return Stride.empty()
    keys = np.concatenate([s.keys for s in live])
    values = np.concatenate([s.values for s in live])
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    return Stride(keys[starts], np.maximum.reduceat(values[order], starts))


def _union_keys(strides: list[Stride], tree: str) -> np.ndarray:
    """Pairwise key-set union under the requested merge-tree shape."""
    sets = [s.keys for s in strides]
    if not sets:
        return np.empty(0, dtype=np.uint32)
    if tree == "left":
        acc = sets[0]
        for keys in sets[1:]:
            acc = np.union1d(acc, keys)
        return acc.astype(np.uint32)
    if tree == "right":
        acc = sets[-1]
        for keys in reversed(sets[:-1]):
            acc = np.union1d(keys, acc)
        return acc.astype(np.uint32)
    if tree == "balanced":
        while len(sets) > 1:
            sets = [
                np.union1d(sets[i], sets[i + 1]) if i + 1 < len(sets) else sets[i]
                for i in range(0, len(sets), 2)
            ]
        return sets[0].astype(np.uint32)
    raise ValueError(f"tree must be left, right, or balanced, got {tree!r}")


def reduce_document_level(
    strides: list[Stride], prefix: np.ndarray, tree: str = "balanced"
) -> Stride:
    """Sum per-token strides into final document scores with imputation.

    prefix is the length n_tokens+1 float32 running sum of the per-token
    missing scores, prefix[0] == 0. Output keys are the union of input
    keys; a document absent from every stride never appears.
    """
    n_tokens = len(strides)
    if prefix.shape != (n_tokens + 1,):
        raise ValueError(f"prefix must have {n_tokens + 1} entries, got {prefix.shape}")
    keys = _union_keys(strides, tree)
    acc = np.zeros(len(keys), dtype=np.float32)
    last = np.zeros(len(keys), dtype=np.int64)  # 1-based token whose value arrived last
    for t, stride in enumerate(strides, start=1):
        if not len(stride):
            continue
        idx = np.searchsorted(keys, stride.keys)
        gap = last[idx] < t - 1
        gi = idx[gap]
        acc[gi] += prefix[t - 1] - prefix[last[gi]]
        acc[idx] += stride.values
        last[idx] = t
    tail = last < n_tokens
    acc[tail] += prefix[n_tokens] - prefix[last[tail]]
    return Stride(keys, acc)


def top_k(stride: Stride, k: int) -> RankedResults:
    """k best (doc, score) pairs, descending score, ties by ascending id.

    Exactly the head of the full (-score, id) sort.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    n = len(stride)
    if n > k:
        # keys ascend, so among threshold ties the earliest rows win
        threshold = np.partition(stride.values, n - k)[n - k]
        above = np.flatnonzero(stride.values > threshold)
        ties = np.flatnonzero(stride.values == threshold)[: k - above.size]
        sel = np.concatenate([above, ties])
    else:
        sel = np.arange(n)
    order = np.lexsort((stride.keys[sel], -stride.values[sel]))
    sel = sel[order]
    return RankedResults(stride.keys[sel].astype(np.int64), stride.values[sel])


def oracle_score(
    index: CompressedIndex, query_vectors: np.ndarray, plan: ProbePlan
) -> RankedResults:
    """Reference scorer: explicit decompression and a dense score matrix.

    Ranks every candidate retrieved for at least one token. Matrix entry
    (candidate, token) is the max inner product over the candidate's
    retrieved tokens, or the token's missing score when nothing was
    retrieved. Row sums fold left to right in float32, matching the
    production summation order.
    """
    q = np.asarray(query_vectors, dtype=np.float32)
    n_tokens = q.shape[0]
    per_token: list[Stride] = []
    for i in range(n_tokens):
        ids_parts = []
        score_parts = []
        for c in map(int, plan.probe_ids[i]):
            start, stop = index.cluster_offsets[c], index.cluster_offsets[c + 1]
            if start == stop:
                continue
            vectors = decompress_cluster(index, c)
            ids_parts.append(index.doc_ids[start:stop])
            score_parts.append(vectors @ q[i])
        if ids_parts:
            doc_ids = np.concatenate(ids_parts)
            scores = np.concatenate(score_parts).astype(np.float32)
            order = np.argsort(doc_ids, kind="stable")
            doc_ids = doc_ids[order]
            starts = np.flatnonzero(np.concatenate(([True], doc_ids[1:] != doc_ids[:-1])))
            per_token.append(Stride(doc_ids[starts], np.maximum.reduceat(scores[order], starts)))
        else:
            per_token.append(Stride.empty())

    candidates = _union_keys(per_token, "balanced")
    matrix = np.tile(plan.missing, (len(candidates), 1)).astype(np.float32)
    for i, stride in enumerate(per_token):
        if len(stride):
            matrix[np.searchsorted(candidates, stride.keys), i] = stride.values
    totals = np.zeros(len(candidates), dtype=np.float32)
    for i in range(n_tokens):
        totals += matrix[:, i]
    order = np.lexsort((candidates, -totals))
    return RankedResults(candidates[order].astype(np.int64), totals[order])
