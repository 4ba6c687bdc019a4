"""Multi-vector late-interaction retrieval over quantized residual indexes.

A document is a bag of unit token embeddings; its score for a query is
the sum over query tokens of the best token-level inner product.
Retrieval approximates that sum by probing only the best-scoring
clusters per query token and imputing a centroid-derived estimate for
everything unprobed, scoring compressed residuals without ever
reconstructing token vectors.
"""

from .corpus import (
    DIM,
    QUERY_MAXLEN,
    EmbeddingCollection,
    QueryEmbeddings,
    Qrels,
    load_collection,
    load_qrels,
    load_queries,
    save_collection,
    save_queries,
    synth_corpus,
    synth_queries,
)
from .engine import SearchReport, search, search_batch
from .indexer import (
    BucketWeights,
    CompressedIndex,
    IndexConfig,
    assign_and_compress,
    build_index,
    compute_bucket_weights,
    decompress_cluster,
    decompress_explicit,
    load_index,
    quantize_residuals,
    resolve_n_centroids,
    sample_training_set,
    save_index,
    train_centroids,
)
from .kernel import OpCount, Stride, build_upsilon, score_cluster, score_cluster_instrumented
from .metrics import MetricSet, evaluate
from .packing import pack_codes, unpack_codes
from .probing import (
    ProbePlan,
    SearchParams,
    compute_tprime,
    plan,
    score_centroids,
    select_probes,
)
from .reduction import (
    RankedResults,
    oracle_score,
    reduce_document_level,
    reduce_token_level,
    top_k,
)
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "DIM",
    "QUERY_MAXLEN",
    "BucketWeights",
    "CompressedIndex",
    "EmbeddingCollection",
    "IndexConfig",
    "MetricSet",
    "OpCount",
    "ProbePlan",
    "Qrels",
    "QueryEmbeddings",
    "RankedResults",
    "SearchParams",
    "SearchReport",
    "Stride",
    "assign_and_compress",
    "build_index",
    "build_upsilon",
    "cli_main",
    "compute_bucket_weights",
    "compute_tprime",
    "decompress_cluster",
    "decompress_explicit",
    "evaluate",
    "load_collection",
    "load_index",
    "load_qrels",
    "load_queries",
    "oracle_score",
    "pack_codes",
    "plan",
    "quantize_residuals",
    "reduce_document_level",
    "reduce_token_level",
    "resolve_n_centroids",
    "sample_training_set",
    "save_collection",
    "save_index",
    "save_queries",
    "score_centroids",
    "score_cluster",
    "score_cluster_instrumented",
    "search",
    "search_batch",
    "select_probes",
    "synth_corpus",
    "synth_queries",
    "top_k",
    "train_centroids",
    "unpack_codes",
]
