"""Embedding backends: a deterministic offline hash embedder, an HTTP client
for an embedding service, and a loader for sidecar vector files."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Sequence

import httpx
import numpy as np

from .errors import ConfigurationError, DatasetError
from .retrieval import tokenize


class HashEmbedder:
    """Hashed bag-of-words embedder, d=64, L2-normalized.

    Fully offline and platform-stable (buckets and signs come from sha256 of
    the token bytes, not Python's salted hash), so the whole pipeline is
    testable without a model server. Texts with no tokens map to a fixed
    basis vector to keep the unit-norm contract.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.model_id = f"hash-bow-{dim}"

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm


class HttpEmbedder:
    """Client for an embedding service: POST {model, texts} -> {vectors}."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        resp = self._client.post(
            f"{self.base_url}/embed", json={"model": self.model_id, "texts": list(texts)}
        )
        resp.raise_for_status()
        vectors = resp.json()["vectors"]
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise ConfigurationError("embedding service returned a zero vector")
            out.append(arr / norm)
        return out


class SidecarVectors:
    """Precomputed reference vectors keyed by (doc_id, paragraph_index) and qid.

    Stored as an .npz archive with arrays ``para::<doc_id>`` (one row per
    paragraph) and ``query::<qid>``; vectors are re-normalized on load.
    """

    def __init__(self, model_id: str, paragraphs: Mapping[str, np.ndarray], queries: Mapping[str, np.ndarray]):
        self.model_id = model_id
        self._paragraphs = dict(paragraphs)
        self._queries = dict(queries)

    @classmethod
    def load(cls, path: str | Path) -> "SidecarVectors":
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"sidecar vector file not found: {path}")
        data = np.load(path, allow_pickle=False)
        model_id = "unknown"
        paragraphs: dict[str, np.ndarray] = {}
        queries: dict[str, np.ndarray] = {}
        for key in data.files:
            if key == "model_id":
                model_id = str(data[key])
            elif key.startswith("para::"):
                mat = np.asarray(data[key], dtype=np.float64)
                norms = np.linalg.norm(mat, axis=1, keepdims=True)
                norms[norms == 0.0] = 1.0
                paragraphs[key[len("para::"):]] = mat / norms
            elif key.startswith("query::"):
                vec = np.asarray(data[key], dtype=np.float64)
                norm = float(np.linalg.norm(vec)) or 1.0
                queries[key[len("query::"):]] = vec / norm
        return cls(model_id, paragraphs, queries)

    @staticmethod
    def save(
        path: str | Path,
        model_id: str,
        paragraphs: Mapping[str, np.ndarray],
        queries: Mapping[str, np.ndarray],
    ) -> None:
        arrays: dict[str, np.ndarray] = {"model_id": np.asarray(model_id)}
        for doc_id, mat in paragraphs.items():
            arrays[f"para::{doc_id}"] = np.asarray(mat, dtype=np.float32)
        for qid, vec in queries.items():
            arrays[f"query::{qid}"] = np.asarray(vec, dtype=np.float32)
        np.savez_compressed(path, **arrays)

    def doc_matrix(self, doc_id: str) -> np.ndarray:
        if doc_id not in self._paragraphs:
            raise DatasetError(f"no sidecar vectors for document {doc_id!r}")
        return self._paragraphs[doc_id]

    def query_vec(self, qid: str) -> np.ndarray:
        if qid not in self._queries:
            raise DatasetError(f"no sidecar query vector for question {qid!r}")
        return self._queries[qid]

    def has_doc(self, doc_id: str) -> bool:
        return doc_id in self._paragraphs
