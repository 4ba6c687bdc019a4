"""Candidate generation: centroid scoring, probe selection, missing scores.

Every query token scores all K centroids once (a single matmul per
query). From the descending score order two things are read off: the
top-n_probe clusters to decompress, and the missing-similarity estimate
used when a document lacks any retrieved token for this query token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .indexer import CompressedIndex


@dataclass(frozen=True)
class SearchParams:
    """Retrieval-time knobs. t_prime is an explicit cumulative-size
    threshold or "auto" (min(t_prime_max, max(1, round(sqrt(n_tokens)))))."""

    n_probe: int = 32
    t_prime: int | str = "auto"
    t_prime_max: int = 100_000
    k: int = 10
    threads: int = 1

    def validate(self) -> None:
        if self.n_probe < 1 or self.k < 1 or self.threads < 1 or self.t_prime_max < 1:
            raise ValueError("n_probe, k, threads, and t_prime_max must be positive")
        if self.t_prime != "auto" and (not isinstance(self.t_prime, int) or self.t_prime < 0):
            raise ValueError("t_prime must be 'auto' or a non-negative int")


@dataclass
class ProbePlan:
    """Per-token probe decisions for one query.

    probe_ids/probe_scores are (n_tokens, n_probe), scores descending
    within each row. missing[i] is the imputed score for token i, and
    prefix is its float32 running sum with a leading zero so that
    sum(missing[i..j]) = prefix[j+1] - prefix[i].
    """

    centroid_scores: np.ndarray
    probe_ids: np.ndarray
    probe_scores: np.ndarray
    missing: np.ndarray
    prefix: np.ndarray
    t_prime: int

    @property
    def n_tokens(self) -> int:
        return self.probe_ids.shape[0]

    @property
    def n_probe(self) -> int:
        return self.probe_ids.shape[1]


def score_centroids(query_vectors: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Inner products of every query token against every centroid."""
    return np.asarray(query_vectors, dtype=np.float32) @ centroids.T


def compute_tprime(n_tokens: int, t_prime_max: int = 100_000) -> int:
    """Cumulative cluster-size threshold, proportional to sqrt(corpus size)."""
    return min(t_prime_max, max(1, round(math.sqrt(n_tokens))))


def select_probes(
    scores_row: np.ndarray,
    cluster_sizes: np.ndarray,
    n_probe: int,
    t_prime: int,
) -> tuple[np.ndarray, np.ndarray, np.float32]:
    """Probe ids/scores for one token plus its missing-score estimate.

    Clusters are walked in descending score order (ties: lower id
    first). The first n_probe are probed. The missing score is the score
    of the first cluster at which the running size total strictly
    exceeds t_prime; if it never does, the walk's last (smallest) score.
    """
    scores_row = np.asarray(scores_row, dtype=np.float32)
    # stable sort on the negated row keeps ascending ids among equal scores
    order = np.argsort(-scores_row, kind="stable")
    running = np.cumsum(cluster_sizes[order])
    crossed = running > t_prime
    cross_at = int(np.argmax(crossed)) if crossed.any() else len(order) - 1
    missing = scores_row[order[cross_at]]
    probes = order[: min(n_probe, len(order))]
    return probes.astype(np.int32), scores_row[probes], missing


def plan(query_vectors: np.ndarray, index: CompressedIndex, params: SearchParams) -> ProbePlan:
    """Score centroids once and derive every token's probes and imputation."""
    params.validate()
    scores = score_centroids(query_vectors, index.centroids)
    if params.t_prime == "auto":
        t_prime = compute_tprime(index.n_tokens, params.t_prime_max)
    else:
        t_prime = params.t_prime
    sizes = index.cluster_sizes()
    n_tokens = scores.shape[0]
    width = min(params.n_probe, index.n_centroids)
    probe_ids = np.empty((n_tokens, width), dtype=np.int32)
    probe_scores = np.empty((n_tokens, width), dtype=np.float32)
    missing = np.empty(n_tokens, dtype=np.float32)
    for i in range(n_tokens):
        probe_ids[i], probe_scores[i], missing[i] = select_probes(
            scores[i], sizes, params.n_probe, t_prime
        )
    prefix = np.zeros(n_tokens + 1, dtype=np.float32)
    np.cumsum(missing, dtype=np.float32, out=prefix[1:])
    return ProbePlan(
        centroid_scores=scores,
        probe_ids=probe_ids,
        probe_scores=probe_scores,
        missing=missing,
        prefix=prefix,
        t_prime=t_prime,
    )
