"""Vector representations for artifacts and demonstration pairs.

Two providers sit behind one call, :func:`embed_texts`: a precomputed
JSON vector file for fully offline runs, and a remote embedding endpoint
speaking the usual ``{"model": ..., "input": [...]}`` POST shape. Vector
files key entries by the SHA-256 of the text so keys stay short; raw
texts and alias names are also accepted as keys for hand-written files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ClientError, DataError
from . import _http

if TYPE_CHECKING:
    from .corpus import CandidatePair, TraceDataset


@dataclass
class EmbeddingProviderConfig:
    kind: str  # "file" | "remote"
    file_path: str | None = None
    endpoint: str | None = None
    model_name: str | None = None
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.kind not in ("file", "remote"):
            raise ValueError(f"unknown embedding provider kind {self.kind!r}")
        if self.kind == "file" and not self.file_path:
            raise ValueError("file provider needs file_path")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote provider needs endpoint")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def text_key(text: str) -> str:
    """Stable lookup key for a text: hex SHA-256 of its UTF-8 bytes."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class FileVectorStore:
    """Read-only vector file: {"vectors": {key: [...]}, "aliases": {name: key}}.

    A vector may be keyed by ``text_key(text)``, by the raw text itself,
    or reached through an alias entry. Shareable across threads once
    loaded.
    """

    def __init__(self, path: str | Path):
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        self.vectors: dict[str, list[float]] = doc.get("vectors", doc if isinstance(doc, dict) else {})
        self.aliases: dict[str, str] = doc.get("aliases", {}) if "vectors" in doc else {}
        self.path = str(path)

    def lookup(self, text: str) -> np.ndarray:
        for key in (text_key(text), text, self.aliases.get(text)):
            if key is not None and key in self.vectors:
                return np.asarray(self.vectors[key], dtype=float)
        raise DataError(f"missing embedding for text key {text_key(text)[:12]}... in {self.path}")


def write_vector_file(path: str | Path, texts_to_vectors: dict[str, list[float]]) -> None:
    """Write a vector file keyed by text hash (helper for tests and offline prep)."""
    doc = {"vectors": {text_key(t): list(map(float, v)) for t, v in texts_to_vectors.items()}}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def _embed_remote(cfg: EmbeddingProviderConfig, texts: list[str]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for start in range(0, len(texts), cfg.batch_size):
        batch = texts[start : start + cfg.batch_size]
        payload = {"model": cfg.model_name, "input": batch}
        _status, doc, _retries = _http.post_json(cfg.endpoint, payload)
        data = doc.get("data")
        if not isinstance(data, list) or len(data) != len(batch):
            got = len(data) if isinstance(data, list) else "none"
            raise ClientError(f"embedding count mismatch: sent {len(batch)} texts, got {got} vectors")
        ordered = sorted(data, key=lambda item: item["index"])
        out.extend(np.asarray(item["embedding"], dtype=float) for item in ordered)
    return out


def embed_texts(cfg: EmbeddingProviderConfig, texts: list[str]) -> list[np.ndarray]:
    """One vector per text, order preserved, all the same dimension."""
    if not texts:
        return []
    if cfg.kind == "file":
        store = FileVectorStore(cfg.file_path)
        vectors = [store.lookup(t) for t in texts]
    else:
        vectors = _embed_remote(cfg, texts)
    dim = vectors[0].shape
    for i, v in enumerate(vectors):
        if v.ndim != 1 or v.shape != dim:
            raise DataError(f"dim mismatch in batch: vector {i} has shape {v.shape}, expected {dim}")
        if not np.all(np.isfinite(v)):
            raise DataError(f"non-finite embedding values for text index {i}")
    return vectors


def pair_representation(pair: "CandidatePair", ds: "TraceDataset") -> str:
    """Source text, a single space, target text (texts were trimmed at load)."""
    try:
        src = ds.source_text(pair.source_id)
        tgt = ds.target_text(pair.target_id)
    except KeyError as exc:
        raise DataError(f"unknown artifact id {exc.args[0]!r} in pair {pair.key}") from exc
    return f"{src} {tgt}"


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1]; symmetric exactly in its arguments."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dim mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-norm vector: upstream embedding failure")
    return min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv)))
