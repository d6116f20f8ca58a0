"""Per-document paragraph index: Okapi BM25 and cosine top-k retrieval.

Corpus statistics are computed over a single document's paragraphs
(within-document retrieval). Tokenization is lowercase with splits on
non-alphanumeric boundaries, no stemming and no stop-word removal; BM25
defaults are k1=1.2, b=0.75 with the smoothed non-negative IDF
``ln(1 + (N - df + 0.5) / (df + 0.5))``. Ties always break by ascending
paragraph index so rankings are reproducible.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

import numpy as np

from .documents import TrialDocument
from .errors import ConfigurationError, IndexBuildError
from .utils import canonical_dumps, sha256_hex

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class EmbedderInterface(Protocol):
    """Text embedder contract: unit-norm vectors, deterministic per model_id."""

    model_id: str

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class RetrievalResult:
    paragraph_index: int
    score: float


@dataclass
class ParagraphIndex:
    doc_id: str
    model_id: str
    k1: float
    b: float
    term_freqs: list[dict[str, int]]
    lengths: list[int]
    doc_freqs: dict[str, int]
    vectors: np.ndarray  # (n_paragraphs, dim), rows unit-normalized
    avg_length: float = field(init=False)

    def __post_init__(self) -> None:
        n = len(self.lengths)
        self.avg_length = (sum(self.lengths) / n) if n else 0.0

    def __len__(self) -> int:
        return len(self.lengths)


def build_index(
    doc: TrialDocument,
    embedder: EmbedderInterface,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> ParagraphIndex:
    """Index every paragraph of a document for BM25 and cosine retrieval."""
    term_freqs: list[dict[str, int]] = []
    lengths: list[int] = []
    doc_freqs: Counter[str] = Counter()
    vectors = []
    for para in doc.paragraphs:
        tokens = tokenize(para.text)
        tf = dict(Counter(tokens))
        term_freqs.append(tf)
        lengths.append(len(tokens))
        for term in tf:
            doc_freqs[term] += 1
        try:
            vec = np.asarray(embedder.embed(para.text), dtype=np.float64)
        except Exception as exc:
            raise IndexBuildError(
                f"embedding failed for paragraph {para.index} of {doc.doc_id}: {exc}"
            ) from exc
        vectors.append(vec)
    return ParagraphIndex(
        doc_id=doc.doc_id,
        model_id=embedder.model_id,
        k1=k1,
        b=b,
        term_freqs=term_freqs,
        lengths=lengths,
        doc_freqs=dict(doc_freqs),
        vectors=np.vstack(vectors) if vectors else np.zeros((0, 0)),
    )


def index_from_vectors(
    doc_id: str, vectors: np.ndarray, model_id: str
) -> ParagraphIndex:
    """Build a vector-only index from precomputed paragraph embeddings.

    BM25 queries against such an index score everything 0; used when
    rankings come from a sidecar vector file rather than a live embedder.
    """
    n = vectors.shape[0]
    return ParagraphIndex(
        doc_id=doc_id,
        model_id=model_id,
        k1=DEFAULT_K1,
        b=DEFAULT_B,
        term_freqs=[{} for _ in range(n)],
        lengths=[0] * n,
        doc_freqs={},
        vectors=np.asarray(vectors, dtype=np.float64),
    )


def _top_k(scores: Sequence[float], k: int) -> list[RetrievalResult]:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [RetrievalResult(i, float(scores[i])) for i in order[: max(0, k)]]


def query_with_vector(idx: ParagraphIndex, query_vec: np.ndarray, k: int) -> list[RetrievalResult]:
    scores = idx.vectors @ np.asarray(query_vec, dtype=np.float64)
    return _top_k(scores.tolist(), k)


def query_vector(
    idx: ParagraphIndex, query: str, k: int, embedder: EmbedderInterface
) -> list[RetrievalResult]:
    """Cosine top-k over unit-normalized paragraph vectors."""
    if embedder.model_id != idx.model_id:
        raise ConfigurationError(
            f"index built with {idx.model_id!r} but queried with {embedder.model_id!r}"
        )
    return query_with_vector(idx, embedder.embed(query), k)


def bm25_scores(idx: ParagraphIndex, query: str) -> list[float]:
    """Okapi BM25 score of every paragraph for a query (0 when no term overlaps)."""
    n = len(idx)
    query_tokens = tokenize(query)
    scores = [0.0] * n
    if n == 0 or idx.avg_length == 0:
        return scores
    for i, tf in enumerate(idx.term_freqs):
        norm = idx.k1 * (1.0 - idx.b + idx.b * idx.lengths[i] / idx.avg_length)
        s = 0.0
        for term in query_tokens:
            f = tf.get(term)
            if not f:
                continue
            df = idx.doc_freqs[term]
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            s += idf * f * (idx.k1 + 1.0) / (f + norm)
        scores[i] = s
    return scores


def query_bm25(idx: ParagraphIndex, query: str, k: int) -> list[RetrievalResult]:
    return _top_k(bm25_scores(idx, query), k)


def recall_at_k(
    rankings: Mapping[Any, Sequence[int]],
    gold: Mapping[Any, int | None],
    k: int,
) -> float:
    """Fraction of gold-evidence questions whose gold paragraph is in the top k.

    ``rankings`` maps a question key to its ranked paragraph indices; keys
    whose gold is None are excluded. Raises ValueError for k < 1 and
    KeyError when a gold-bearing key has no ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    keys = [key for key, g in gold.items() if g is not None]
    if not keys:
        return 0.0
    hits = 0
    for key in keys:
        ranked = rankings[key]
        if gold[key] in list(ranked[:k]):
            hits += 1
    return hits / len(keys)


def index_to_dict(idx: ParagraphIndex) -> dict[str, Any]:
    return {
        "doc_id": idx.doc_id,
        "model_id": idx.model_id,
        "k1": idx.k1,
        "b": idx.b,
        "term_freqs": [dict(sorted(tf.items())) for tf in idx.term_freqs],
        "lengths": idx.lengths,
        "doc_freqs": dict(sorted(idx.doc_freqs.items())),
        "vectors": [[float(x) for x in row] for row in idx.vectors],
    }


def index_digest(idx: ParagraphIndex) -> str:
    """Stable digest of the serialized index; equal digests mean equal indexes."""
    return sha256_hex(canonical_dumps(index_to_dict(idx)))


def index_from_dict(data: Mapping[str, Any]) -> ParagraphIndex:
    return ParagraphIndex(
        doc_id=data["doc_id"],
        model_id=data["model_id"],
        k1=data["k1"],
        b=data["b"],
        term_freqs=[dict(tf) for tf in data["term_freqs"]],
        lengths=list(data["lengths"]),
        doc_freqs=dict(data["doc_freqs"]),
        vectors=np.asarray(data["vectors"], dtype=np.float64),
    )
