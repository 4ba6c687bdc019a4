"""Ranking quality metrics over run results and relevance judgments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Qrels
from .reduction import RankedResults

RunResults = dict[str, "RankedResults | Sequence[tuple[int, float]]"]


@dataclass
class MetricSet:
    """Per-query metric values and their macro averages."""

    per_query: dict[str, dict[str, float]]
    mean: dict[str, float]
    n_queries: int


def _ranked_docs(entry: RankedResults | Sequence[tuple[int, float]]) -> list[int]:
    if isinstance(entry, RankedResults):
        return [int(d) for d in entry.doc_ids]
    return [int(doc) for doc, _ in entry]


def _ndcg(ranked: list[int], grades: dict[int, int], cutoff: int) -> float:
    # exponential gain (2^grade - 1), log2 rank discount, ideal normalization
    dcg = 0.0
    for rank, doc in enumerate(ranked[:cutoff], start=1):
        gain = (1 << grades.get(doc, 0)) - 1
        dcg += gain / math.log2(rank + 1)
    ideal = sorted(grades.values(), reverse=True)[:cutoff]
    idcg = sum(((1 << g) - 1) / math.log2(r + 1) for r, g in enumerate(ideal, start=1))
    return dcg / idcg if idcg > 0 else 0.0


def evaluate(results: RunResults, qrels: Qrels, recall_cutoffs: Sequence[int] = (10, 100)) -> MetricSet:
    """Recall@k, Success@5, nDCG@10 per query, macro-averaged.

    A query counts only if it has at least one positively graded
    judgment; unjudged queries in the run are ignored. Raises if nothing
    is evaluable.
    """
    per_query: dict[str, dict[str, float]] = {}
    for qid, entry in results.items():
        grades = qrels.get(qid)
        if not grades:
            continue
        relevant = {doc for doc, g in grades.items() if g > 0}
        if not relevant:
            continue
        ranked = _ranked_docs(entry)
        row: dict[str, float] = {}
        for cutoff in recall_cutoffs:
            hits = len(relevant.intersection(ranked[:cutoff]))
            row[f"recall@{cutoff}"] = hits / len(relevant)
        row["success@5"] = 1.0 if relevant.intersection(ranked[:5]) else 0.0
        row["ndcg@10"] = _ndcg(ranked, grades, 10)
        per_query[qid] = row
    if not per_query:
        raise ValueError("no queries with positive judgments to evaluate")
    names = next(iter(per_query.values())).keys()
    mean = {
        name: float(np.mean([row[name] for row in per_query.values()])) for name in names
    }
    return MetricSet(per_query=per_query, mean=mean, n_queries=len(per_query))
