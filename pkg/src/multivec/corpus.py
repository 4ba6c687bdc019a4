"""Embedding corpus I/O: collections, query sets, relevance judgments.

Binary layouts (all integers and floats little-endian):

Collection file
    magic     8 bytes  b"WARPEMB1"
    version   u32      1
    n_docs    u64
    n_tokens  u64
    dim       u32      128
    offsets   (n_docs + 1) x u64   token offsets per document, offsets[0] == 0
    vectors   n_tokens x 128 x f32

The header is exactly 32 bytes. Documents are contiguous token ranges;
every document holds at least one token and every token vector is
L2-normalized to within 1e-3.

Query file
    magic     8 bytes  b"WARPQRY1"
    version   u32      1
    n_queries u64
    dim       u32      128
    then per query: n_tokens u32 (1 <= n_tokens <= 32), n_tokens x 128 x f32

Qrels file: TSV lines "qid<TAB>docid<TAB>grade" with integer docid and
non-negative integer grade. Duplicate (qid, docid) pairs keep the
maximum grade.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    EmptyDocumentError,
    FormatError,
    InvalidVectorError,
    MalformedHeaderError,
    NormError,
    OffsetError,
    SizeMismatchError,
    TokenCountError,
    UnsupportedVersionError,
)

DIM = 128
QUERY_MAXLEN = 32
NORM_TOLERANCE = 1e-3

_COLLECTION_MAGIC = b"WARPEMB1"
_QUERY_MAGIC = b"WARPQRY1"
_VERSION = 1

Qrels = dict[str, dict[int, int]]


@dataclass
class EmbeddingCollection:
    """Token embeddings for a document collection.

    vectors is the flat (n_tokens, 128) float32 matrix; doc_offsets has
    n_docs + 1 strictly increasing entries delimiting each document's
    token rows.
    """

    doc_offsets: np.ndarray
    vectors: np.ndarray

    @property
    def n_docs(self) -> int:
        return len(self.doc_offsets) - 1

    @property
    def n_tokens(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def doc_tokens(self, doc_id: int) -> np.ndarray:
        """View of one document's token vectors."""
        return self.vectors[self.doc_offsets[doc_id] : self.doc_offsets[doc_id + 1]]

    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.doc_offsets)

    def validate(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != DIM:
            raise DimensionError(f"vectors must be (n, {DIM}), got {self.vectors.shape}")
        _check_offsets(self.doc_offsets, self.n_tokens)
        _check_vectors(self.vectors)


@dataclass
class QueryEmbeddings:
    """Token embeddings for one query, at most 32 rows."""

    vectors: np.ndarray

    @property
    def n_tokens(self) -> int:
        return self.vectors.shape[0]

    def validate(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != DIM:
            raise DimensionError(f"query vectors must be (n, {DIM}), got {self.vectors.shape}")
        if not 1 <= self.n_tokens <= QUERY_MAXLEN:
            raise TokenCountError(
                f"query token count must be in [1, {QUERY_MAXLEN}], got {self.n_tokens}"
            )
        _check_vectors(self.vectors)


def _check_offsets(offsets: np.ndarray, n_tokens: int) -> None:
    if len(offsets) < 2 or offsets[0] != 0:
        raise OffsetError("doc_offsets must start at 0 and delimit at least one document")
    if offsets[-1] != n_tokens:
        raise OffsetError(f"doc_offsets end at {offsets[-1]}, expected n_tokens={n_tokens}")
    diffs = np.diff(offsets)
    if np.any(diffs < 0):
        raise OffsetError("doc_offsets must be non-decreasing")
    if np.any(diffs == 0):
        raise EmptyDocumentError("every document must hold at least one token")


def _check_vectors(vectors: np.ndarray) -> None:
    if not np.all(np.isfinite(vectors)):
        raise InvalidVectorError("token vectors contain NaN or infinite values")
    norms = np.linalg.norm(vectors.astype(np.float32, copy=False), axis=1)
    bad = np.abs(norms - 1.0) > NORM_TOLERANCE
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NormError(f"token {i} has L2 norm {norms[i]:.6f}, expected 1.0 +- {NORM_TOLERANCE}")


def save_collection(collection: EmbeddingCollection, path: str) -> None:
    """Write a collection in the layout documented at module top."""
    collection.validate()
    with open(path, "wb") as f:
        f.write(_COLLECTION_MAGIC)
        f.write(struct.pack("<IQQI", _VERSION, collection.n_docs, collection.n_tokens, DIM))
        f.write(np.ascontiguousarray(collection.doc_offsets, dtype="<u8").tobytes())
        f.write(np.ascontiguousarray(collection.vectors, dtype="<f4").tobytes())


def load_collection(path: str) -> EmbeddingCollection:
    """Read and validate a collection file."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 32 or data[:8] != _COLLECTION_MAGIC:
        raise MalformedHeaderError(f"{path}: not a collection file")
    version, n_docs, n_tokens, dim = struct.unpack_from("<IQQI", data, 8)
    if version != _VERSION:
        raise UnsupportedVersionError(f"{path}: version {version}, expected {_VERSION}")
    if dim != DIM:
        raise DimensionError(f"{path}: dim {dim}, expected {DIM}")
    offsets_end = 32 + (n_docs + 1) * 8
    expected = offsets_end + n_tokens * DIM * 4
    if len(data) != expected:
        raise SizeMismatchError(f"{path}: {len(data)} bytes, header implies {expected}")
    offsets = np.frombuffer(data, dtype="<u8", count=n_docs + 1, offset=32).astype(np.int64)
    vectors = np.frombuffer(data, dtype="<f4", offset=offsets_end).reshape(n_tokens, DIM)
    collection = EmbeddingCollection(offsets, vectors.astype(np.float32))
    collection.validate()
    return collection


def save_queries(queries: list[QueryEmbeddings], path: str) -> None:
    for q in queries:
        q.validate()
    with open(path, "wb") as f:
        f.write(_QUERY_MAGIC)
        f.write(struct.pack("<IQI", _VERSION, len(queries), DIM))
        for q in queries:
            f.write(struct.pack("<I", q.n_tokens))
            f.write(np.ascontiguousarray(q.vectors, dtype="<f4").tobytes())


def load_queries(path: str) -> list[QueryEmbeddings]:
    """Read and validate a query file."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 24 or data[:8] != _QUERY_MAGIC:
        raise MalformedHeaderError(f"{path}: not a query file")
    version, n_queries, dim = struct.unpack_from("<IQI", data, 8)
    if version != _VERSION:
        raise UnsupportedVersionError(f"{path}: version {version}, expected {_VERSION}")
    if dim != DIM:
        raise DimensionError(f"{path}: dim {dim}, expected {DIM}")
    queries: list[QueryEmbeddings] = []
    pos = 24
    for i in range(n_queries):
        if pos + 4 > len(data):
            raise SizeMismatchError(f"{path}: truncated before query {i}")
        (n_tokens,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if not 1 <= n_tokens <= QUERY_MAXLEN:
            raise TokenCountError(f"{path}: query {i} has {n_tokens} tokens")
        end = pos + n_tokens * DIM * 4
        if end > len(data):
            raise SizeMismatchError(f"{path}: truncated inside query {i}")
        vecs = np.frombuffer(data, dtype="<f4", count=n_tokens * DIM, offset=pos)
        q = QueryEmbeddings(vecs.reshape(n_tokens, DIM).astype(np.float32))
        q.validate()
        queries.append(q)
        pos = end
    if pos != len(data):
        raise SizeMismatchError(f"{path}: {len(data) - pos} trailing bytes")
    return queries


def load_qrels(path: str) -> Qrels:
    """Parse TSV relevance judgments; duplicate (qid, docid) keeps the max grade."""
    qrels: Qrels = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{line_no}: expected 3 tab-separated fields")
            qid, doc_str, grade_str = parts
            try:
                doc_id = int(doc_str)
                grade = int(grade_str)
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: docid and grade must be integers") from exc
            if grade < 0:
                raise FormatError(f"{path}:{line_no}: grade must be non-negative")
            by_doc = qrels.setdefault(qid, {})
            if grade > by_doc.get(doc_id, -1):
                by_doc[doc_id] = grade
    return qrels


def synth_corpus(
    seed: int,
    n_docs: int,
    token_range: tuple[int, int] = (4, 8),
    n_latent_clusters: int = 32,
) -> EmbeddingCollection:
    """Deterministic synthetic collection.

    Each document draws a latent unit direction; its tokens are that
    direction plus Gaussian noise, renormalized. Token counts are
    uniform over token_range inclusive.
    """
    lo, hi = token_range
    if n_docs < 1 or lo < 1 or hi < lo:
        raise ValueError(f"bad synth parameters: n_docs={n_docs}, token_range={token_range}")
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((n_latent_clusters, DIM))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    counts = rng.integers(lo, hi + 1, size=n_docs)
    themes = rng.integers(0, n_latent_clusters, size=n_docs)
    offsets = np.zeros(n_docs + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    n_tokens = int(offsets[-1])
    vectors = np.empty((n_tokens, DIM), dtype=np.float32)
    token_theme = np.repeat(themes, counts)
    # chunked so the noise buffer stays small for million-token corpora
    for start in range(0, n_tokens, 131072):
        stop = min(start + 131072, n_tokens)
        block = rng.standard_normal((stop - start, DIM), dtype=np.float32)
        block *= np.float32(0.35)
        block += directions[token_theme[start:stop]].astype(np.float32)
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        vectors[start:stop] = block
    return EmbeddingCollection(offsets, vectors)


def synth_queries(
    collection: EmbeddingCollection,
    n_queries: int,
    seed: int,
    noise: float = 0.08,
) -> tuple[list[QueryEmbeddings], Qrels]:
    """Queries perturbed from sampled documents, with planted relevance.

    Query i copies the tokens of one sampled document (truncated to the
    query limit), adds Gaussian noise, renormalizes. The source document
    is the single relevant document for that query, keyed "q{i}".
    """
    if not 1 <= n_queries:
        raise ValueError("n_queries must be positive")
    rng = np.random.default_rng(seed)
    replace = n_queries > collection.n_docs
    doc_ids = rng.choice(collection.n_docs, size=n_queries, replace=replace)
    queries: list[QueryEmbeddings] = []
    qrels: Qrels = {}
    for i, doc_id in enumerate(doc_ids):
        base = collection.doc_tokens(int(doc_id))[:QUERY_MAXLEN]
        vecs = base + rng.standard_normal(base.shape, dtype=np.float32) * np.float32(noise)
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        queries.append(QueryEmbeddings(vecs.astype(np.float32)))
        qrels[f"q{i}"] = {int(doc_id): 1}
    return queries, qrels
