"""Nearest-neighbor retrieval over an embedding index.

`retrieve_top_k` is exhaustive and exact: every index row is scored and ties
are broken by index position, so results are reproducible across runs and
machines for a given kernel backend (the two backends agree to ~1e-12, so
they can only disagree on orderings among near-exact ties). A
random-selection variant provides the matching baseline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .embeddings import EmbeddingIndex
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class RetrievalHit:
    """One retrieved neighbor: the stored id, its cosine, and its 0-based rank."""

    sample_id: str
    similarity: float
    rank: int


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two unit vectors: a float64 dot product clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"cosine shape mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(a @ b, -1.0, 1.0))


def _top_k_positions(sims: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k highest similarities, ties broken by position.

    Equivalent to a stable argsort of -sims truncated to k, with an
    argpartition fast path for small k over large indices. Boundary ties are
    expanded before the stable sort so the fast path can never change which
    positions win.
    """
    n = sims.shape[0]
    if k >= n:
        return np.argsort(-sims, kind="stable")[:k]
    candidates = np.argpartition(-sims, k - 1)[:k]
    threshold = sims[candidates].min()
    contenders = np.flatnonzero(sims >= threshold)
    return contenders[np.argsort(-sims[contenders], kind="stable")][:k]


def retrieve_top_k(index: EmbeddingIndex, query: np.ndarray, k: int) -> list[RetrievalHit]:
    """The k most cosine-similar index entries to a unit-norm query.

    Ordering is total: descending similarity, then ascending index position.
    Asking for more neighbors than the index holds returns the whole index.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    query = np.asarray(query, dtype=np.float32)
    if query.ndim != 1 or query.shape[0] != index.dim:
        raise DataError(
            f"query shape {query.shape} does not match index dim {index.dim}"
        )
    sims = np.clip(kernels.dot_scores(index.vectors, query), -1.0, 1.0)
    positions = _top_k_positions(sims, min(k, len(index)))
    return [
        RetrievalHit(sample_id=index.ids[p], similarity=float(sims[p]), rank=rank)
        for rank, p in enumerate(positions)
    ]


def random_retrieve(
    index: EmbeddingIndex,
    k: int,
    seed: int,
    query: np.ndarray | None = None,
) -> list[RetrievalHit]:
    """k entries sampled uniformly without replacement, seeded.

    Hits are ordered like true retrieval (descending similarity, position
    tie-break) so downstream consumers see the same shape. When no query is
    given there is no similarity to report and it is recorded as 0.0.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > len(index):
        raise DataError(f"cannot sample {k} of {len(index)} index entries")
    positions = sorted(random.Random(seed).sample(range(len(index)), k))
    if query is not None:
        query = np.asarray(query, dtype=np.float32)
        if query.ndim != 1 or query.shape[0] != index.dim:
            raise DataError(
                f"query shape {query.shape} does not match index dim {index.dim}"
            )
        sims = np.clip(kernels.dot_scores(index.vectors, query), -1.0, 1.0)
        scored = [(float(sims[p]), p) for p in positions]
    else:
        scored = [(0.0, p) for p in positions]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [
        RetrievalHit(sample_id=index.ids[p], similarity=sim, rank=rank)
        for rank, (sim, p) in enumerate(scored)
    ]
