"""Exact cosine-similarity retrieval over dense post embeddings.

The index is a plain matrix with precomputed norms; top-k is an exhaustive
scan. Training sets here are small enough (≤ ~14k posts) that exactness is
cheap and keeps results oracle-checkable. Subset posts whose content is
covered by a longer, near-identical neighbor are replaced by that superset
before training.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .augment import TrainingExample
from .cleaning import token_recall
from .errors import DataError

INDEX_MAGIC = b"CNVI"
INDEX_VERSION = 1

# Superset-replacement thresholds: semantic similarity, lexical coverage of
# the shorter post by the longer one, and a strict length increase.
SUPERSET_SIM_THRESHOLD = 0.95
SUPERSET_COVERAGE_THRESHOLD = 0.9


def as_vector(values: Sequence[float], dim: Optional[int] = None) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise DataError(f"embedding must be 1-D, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DataError(f"embedding dim {vec.shape[0]} != expected {dim}")
    if not np.all(np.isfinite(vec)):
        raise DataError("embedding contains non-finite values")
    return vec


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = as_vector(u)
    v = as_vector(v)
    if u.shape[0] != v.shape[0]:
        raise DataError(f"cosine: dim mismatch {u.shape[0]} != {v.shape[0]}")
    nu = float(np.linalg.norm(np.asarray(u, dtype=np.float64)))
    nv = float(np.linalg.norm(np.asarray(v, dtype=np.float64)))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine: zero-norm vector")
    return float(np.dot(u.astype(np.float64), v.astype(np.float64)) / (nu * nv))


@dataclass(frozen=True)
class RetrievalResult:
    id: str
    similarity: float


class VectorIndex:
    """Immutable exact-search index over (id, vector) entries."""

    def __init__(self, ids: list[str], vectors: np.ndarray):
        if len(ids) != len(set(ids)):
            raise DataError("VectorIndex: duplicate ids")
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise DataError("VectorIndex: vectors/id count mismatch")
        if not np.all(np.isfinite(vectors)):
            raise DataError("VectorIndex: non-finite vector values")
        self.ids = list(ids)
        self.vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        self.norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        if np.any(self.norms == 0.0):
            raise DataError("VectorIndex: zero-norm entry")
        self._pos = {id_: i for i, id_ in enumerate(self.ids)}

    @classmethod
    def build(cls, ids: list[str], vectors: Sequence[Sequence[float]]) -> "VectorIndex":
        if not ids:
            raise DataError("VectorIndex: empty index")
        dim = len(vectors[0])
        mat = np.stack([as_vector(v, dim) for v in vectors])
        return cls(ids, mat)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector_for(self, id_: str) -> np.ndarray:
        return self.vectors[self._pos[id_]]

    def top_k(
        self, query: Sequence[float], k: int = 5, exclude: Optional[str] = None
    ) -> list[RetrievalResult]:
        """Exact top-k by cosine, ties broken by ascending id."""
        if k < 1:
            raise DataError(f"top_k: k must be ≥ 1, got {k}")
        q = as_vector(query, self.dim).astype(np.float64)
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise DataError("top_k: zero-norm query")
        sims = self.vectors.astype(np.float64) @ q / (self.norms * qn)
        order = sorted(
            range(len(self.ids)),
            key=lambda i: (-sims[i], self.ids[i]),
        )
        results = []
        for i in order:
            if exclude is not None and self.ids[i] == exclude:
                continue
            results.append(RetrievalResult(id=self.ids[i], similarity=float(sims[i])))
            if len(results) == k:
                break
        return results

    def save(self, path) -> None:
        """Versioned binary file plus a JSON sidecar of ids."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as f:
            f.write(INDEX_MAGIC)
            f.write(struct.pack("<III", INDEX_VERSION, self.dim, len(self.ids)))
            for id_ in self.ids:
                raw = id_.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)
            f.write(self.vectors.astype("<f4").tobytes())
        sidecar = path.with_suffix(path.suffix + ".ids.json")
        sidecar.write_text(json.dumps(self.ids, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "VectorIndex":
        path = Path(path)
        data = path.read_bytes()
        if data[:4] != INDEX_MAGIC:
            raise DataError(f"{path}: not a vector index file")
        version, dim, count = struct.unpack_from("<III", data, 4)
        if version != INDEX_VERSION:
            raise DataError(f"{path}: unsupported index version {version}")
        offset = 16
        ids = []
        for _ in range(count):
            (length,) = struct.unpack_from("<I", data, offset)
            offset += 4
            ids.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        vectors = np.frombuffer(
            data, dtype="<f4", count=count * dim, offset=offset
        ).reshape(count, dim).copy()
        return cls(ids, vectors)


def top_k(
    index: VectorIndex, query: Sequence[float], k: int = 5, exclude: Optional[str] = None
) -> list[RetrievalResult]:
    return index.top_k(query, k=k, exclude=exclude)


def embed_texts(texts: Sequence[str], client) -> list[np.ndarray]:
    """Embed texts through any client exposing embed(texts) -> vectors."""
    raw = client.embed(texts)
    if len(raw) != len(texts):
        raise DataError("embed_texts: result count mismatch")
    dim = len(raw[0]) if raw else 0
    return [as_vector(v, dim) for v in raw]


def build_index(examples: list[TrainingExample], embedder) -> VectorIndex:
    vectors = embed_texts([ex.pair.post.text for ex in examples], embedder)
    return VectorIndex.build([ex.pair.post.id for ex in examples], vectors)


def _token_count(text: str) -> int:
    return len(text.split())


def detect_superset(
    a: TrainingExample,
    b: TrainingExample,
    sim: float,
    sim_threshold: float = SUPERSET_SIM_THRESHOLD,
    coverage_threshold: float = SUPERSET_COVERAGE_THRESHOLD,
) -> bool:
    """True when b's post is a strictly longer superset of a's post."""
    if sim < sim_threshold:
        return False
    if _token_count(b.pair.post.text) <= _token_count(a.pair.post.text):
        return False
    return token_recall(b.pair.post.text, a.pair.post.text) >= coverage_threshold


@dataclass(frozen=True)
class Replacement:
    subset_id: str
    superset_id: str
    similarity: float


def replace_subsets(
    examples: list[TrainingExample],
    index: VectorIndex,
    k: int = 5,
    sim_threshold: float = SUPERSET_SIM_THRESHOLD,
    coverage_threshold: float = SUPERSET_COVERAGE_THRESHOLD,
) -> tuple[list[TrainingExample], list[Replacement]]:
    """Swap each subset post's text for its longest qualifying superset.

    Claims and reasoning are never touched; example count is preserved.
    """
    by_id = {ex.pair.post.id: ex for ex in examples}
    out = []
    log = []
    for ex in examples:
        results = index.top_k(
            index.vector_for(ex.pair.post.id), k=k, exclude=ex.pair.post.id
        )
        best = None
        best_sim = 0.0
        for res in results:
            neighbor = by_id.get(res.id)
            if neighbor is None:
                continue
            if detect_superset(ex, neighbor, res.similarity,
                               sim_threshold, coverage_threshold):
                if best is None or (
                    _token_count(neighbor.pair.post.text)
                    > _token_count(best.pair.post.text)
                ):
                    best = neighbor
                    best_sim = res.similarity
        if best is None:
            out.append(ex)
            continue
        new_post = replace(ex.pair.post, text=best.pair.post.text)
        out.append(replace(ex, pair=replace(ex.pair, post=new_post)))
        log.append(Replacement(
            subset_id=ex.pair.post.id,
            superset_id=best.pair.post.id,
            similarity=best_sim,
        ))
    return out, log
