"""Scorer backends: where mask-fill probabilities and embeddings come from.

Every backend answers two questions: "for this prompt, how probable is each
candidate word at the mask?" and "what is the embedding of this text?".
Backends available here:

* `FixtureBackend` — replays recorded scores from disk; fully offline and
  deterministic, used for tests and reproducible runs.
* `HttpBackend` — talks to a live scoring service over the POST /score,
  POST /embed, GET /info protocol.
* `CachingScorer` — wraps any backend with an append-only on-disk cache keyed
  by (backend identity, prompt, candidate list).
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx
import numpy as np

from .errors import BackendError, DataError

_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ScoreVector:
    """Per-candidate probabilities, aligned with the prompt's candidate order.

    Entries must be finite, non-negative, and sum to at most 1 (sub-unit sums
    are normal: candidates rarely cover the whole vocabulary).
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.probs:
            raise BackendError("score vector must have at least one entry")
        if any(not math.isfinite(p) for p in self.probs):
            raise BackendError(f"score vector has non-finite entries: {self.probs}")
        if any(p < 0.0 for p in self.probs):
            raise BackendError(f"score vector has negative entries: {self.probs}")
        if math.fsum(self.probs) > 1.0 + _SUM_TOLERANCE:
            raise BackendError(
                f"score vector sums to {math.fsum(self.probs)!r}, above 1"
            )

    def renormalize(self) -> "ScoreVector":
        """Rescale so entries sum to exactly 1; degenerate all-zero vectors raise."""
        total = math.fsum(self.probs)
        if total <= 0.0:
            raise BackendError(
                "cannot renormalize a degenerate score vector (all probabilities zero)"
            )
        return ScoreVector(tuple(p / total for p in self.probs))


class ScorerBackend(Protocol):
    """What predictors need from a backend; all three implementations satisfy it."""

    backend_id: str
    deterministic: bool

    def score(self, prompts: list[str], candidates: tuple[str, ...]) -> list[ScoreVector]: ...

    def embed(self, texts: list[str]) -> np.ndarray: ...


def prompt_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cache_key(backend_id: str, prompt: str, candidates: tuple[str, ...]) -> str:
    """Stable cache key: SHA-256 of the canonical JSON of the request triple."""
    canonical = json.dumps(
        [backend_id, prompt, list(candidates)],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        records.append(record)
    return records


class FixtureBackend:
    """Replays scores (and optionally embeddings) recorded to disk.

    Score fixtures are JSON lines of ``{"prompt_sha256": ..., "scores":
    {word: prob}}``; embedding fixtures are ``{"text_sha256": ...,
    "vector": [...]}``. Lookups are by content hash, so fixtures are
    insensitive to prompt ordering and duplication across runs.
    """

    def __init__(self, scores_path: str | Path, embeddings_path: str | Path | None = None):
        scores_path = Path(scores_path)
        if not scores_path.is_file():
            raise DataError(f"score fixture not found: {scores_path}")
        self.backend_id = (
            "fixture:" + hashlib.sha256(scores_path.read_bytes()).hexdigest()[:16]
        )
        self.deterministic = True
        self._scores: dict[str, dict[str, float]] = {}
        for record in _read_jsonl(scores_path):
            try:
                digest = record["prompt_sha256"]
                scores = record["scores"]
            except KeyError as exc:
                raise DataError(f"{scores_path}: score record missing {exc}") from exc
            if not isinstance(scores, dict):
                raise DataError(f"{scores_path}: scores must be an object")
            if digest in self._scores:
                raise DataError(
                    f"{scores_path}: duplicate score entry for prompt {digest}"
                )
            self._scores[digest] = {str(w): float(p) for w, p in scores.items()}
        self._embeddings: dict[str, np.ndarray] | None = None
        if embeddings_path is not None:
            embeddings_path = Path(embeddings_path)
            if not embeddings_path.is_file():
                raise DataError(f"embedding fixture not found: {embeddings_path}")
            self._embeddings = {}
            for record in _read_jsonl(embeddings_path):
                try:
                    digest = record["text_sha256"]
                    vector = record["vector"]
                except KeyError as exc:
                    raise DataError(
                        f"{embeddings_path}: embedding record missing {exc}"
                    ) from exc
                if digest in self._embeddings:
                    raise DataError(
                        f"{embeddings_path}: duplicate embedding for text {digest}"
                    )
                self._embeddings[digest] = np.asarray(vector, dtype=np.float32)

    def score(self, prompts: list[str], candidates: tuple[str, ...]) -> list[ScoreVector]:
        out = []
        for prompt in prompts:
            digest = prompt_sha256(prompt)
            try:
                by_word = self._scores[digest]
            except KeyError:
                raise BackendError(
                    f"score fixture has no entry for prompt sha256={digest}"
                ) from None
            probs = []
            for word in candidates:
                try:
                    probs.append(by_word[word])
                except KeyError:
                    raise BackendError(
                        f"score fixture entry {digest} lacks candidate {word!r}"
                    ) from None
            out.append(ScoreVector(tuple(probs)))
        return out

    def embed(self, texts: list[str]) -> np.ndarray:
        if self._embeddings is None:
            raise BackendError("this fixture backend was built without embeddings")
        rows = []
        for text in texts:
            digest = prompt_sha256(text)
            try:
                rows.append(self._embeddings[digest])
            except KeyError:
                raise BackendError(
                    f"embedding fixture has no entry for text sha256={digest}"
                ) from None
        dims = {row.shape for row in rows}
        if len(dims) > 1:
            raise BackendError(f"embedding fixture mixes dimensions: {sorted(dims)}")
        return np.stack(rows)


class HttpBackend:
    """Client for a live scoring service speaking the /score, /embed, /info protocol."""

    def __init__(
        self,
        base_url: str,
        *,
        max_batch: int = 32,
        retries: int = 2,
        timeout: float = 30.0,
    ):
        self._base_url = base_url.rstrip("/")
        self._max_batch = max_batch
        self._retries = retries
        self._client = httpx.Client(base_url=self._base_url, timeout=timeout)
        self._info: dict | None = None

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        last_error: Exception | None = None
        for _ in range(self._retries + 1):
            try:
                response = self._client.request(method, path, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code != 200:
                raise BackendError(
                    f"{method} {path} returned {response.status_code}: "
                    f"{response.text[:200]}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise BackendError(f"{method} {path} returned non-JSON body") from exc
            if not isinstance(body, dict):
                raise BackendError(f"{method} {path} returned a non-object body")
            return body
        raise BackendError(
            f"{method} {path} failed after {self._retries + 1} attempts: {last_error}"
        )

    def info(self) -> dict:
        if self._info is None:
            body = self._request("GET", "/info")
            if "model" not in body or "deterministic" not in body:
                raise BackendError(f"/info response missing fields: {body}")
            self._info = body
        return self._info

    @property
    def backend_id(self) -> str:
        return f"http:{self.info()['model']}"

    @property
    def deterministic(self) -> bool:
        return bool(self.info()["deterministic"])

    def score(self, prompts: list[str], candidates: tuple[str, ...]) -> list[ScoreVector]:
        out: list[ScoreVector] = []
        for start in range(0, len(prompts), self._max_batch):
            batch = prompts[start : start + self._max_batch]
            body = self._request(
                "POST", "/score", {"prompts": batch, "candidates": list(candidates)}
            )
            probs = body.get("probs")
            if not isinstance(probs, list) or len(probs) != len(batch):
                raise BackendError(
                    f"/score returned {len(probs) if isinstance(probs, list) else 'no'} "
                    f"rows for {len(batch)} prompts"
                )
            for row in probs:
                if not isinstance(row, list) or len(row) != len(candidates):
                    raise BackendError(
                        f"/score row has {len(row) if isinstance(row, list) else 'no'} "
                        f"entries for {len(candidates)} candidates"
                    )
                out.append(ScoreVector(tuple(float(p) for p in row)))
        return out

    def embed(self, texts: list[str]) -> np.ndarray:
        rows: list[list[float]] = []
        dim: int | None = None
        for start in range(0, len(texts), self._max_batch):
            batch = texts[start : start + self._max_batch]
            body = self._request("POST", "/embed", {"texts": batch})
            vectors = body.get("vectors")
            batch_dim = body.get("dim")
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise BackendError(f"/embed returned wrong row count for {len(batch)} texts")
            if not isinstance(batch_dim, int) or batch_dim < 1:
                raise BackendError(f"/embed returned bad dim: {batch_dim!r}")
            if dim is None:
                dim = batch_dim
            elif dim != batch_dim:
                raise BackendError(f"/embed dim changed between batches: {dim} vs {batch_dim}")
            for row in vectors:
                if not isinstance(row, list) or len(row) != batch_dim:
                    raise BackendError("/embed row length does not match dim")
                rows.append([float(v) for v in row])
        matrix = np.asarray(rows, dtype=np.float32)
        if not np.all(np.isfinite(matrix)):
            raise BackendError("/embed returned non-finite values")
        return matrix

    def close(self) -> None:
        self._client.close()


class CachingScorer:
    """Write-through score cache over any backend.

    The cache file is append-only JSON lines of ``{"key", "probs"}``. A torn
    final line (interrupted writer) is tolerated and dropped; anything else
    malformed is an error. Appends are serialized with a lock so concurrent
    predictors on one process never interleave partial lines.
    """

    def __init__(self, backend: ScorerBackend, cache_path: str | Path):
        self._backend = backend
        self._path = Path(cache_path)
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[float, ...]] = {}
        self.backend_prompts = 0  # prompts actually sent to the wrapped backend
        if self._path.is_file():
            lines = self._path.read_text(encoding="utf-8").splitlines()
            for lineno, line in enumerate(lines, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    key, probs = record["key"], record["probs"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    if lineno == len(lines):
                        break  # torn final line from an interrupted append
                    raise DataError(f"{self._path}:{lineno}: corrupt cache line: {exc}") from exc
                self._entries[key] = tuple(float(p) for p in probs)
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def backend_id(self) -> str:
        return self._backend.backend_id

    @property
    def deterministic(self) -> bool:
        return self._backend.deterministic

    def score(self, prompts: list[str], candidates: tuple[str, ...]) -> list[ScoreVector]:
        keys = [cache_key(self._backend.backend_id, p, candidates) for p in prompts]
        missing_positions = [i for i, key in enumerate(keys) if key not in self._entries]
        if missing_positions:
            fetched = self._backend.score(
                [prompts[i] for i in missing_positions], candidates
            )
            self.backend_prompts += len(missing_positions)
            with self._lock, self._path.open("a", encoding="utf-8") as fh:
                for i, vector in zip(missing_positions, fetched):
                    self._entries[keys[i]] = vector.probs
                    fh.write(
                        json.dumps(
                            {"key": keys[i], "probs": list(vector.probs)},
                            separators=(",", ":"),
                        )
                        + "\n"
                    )
        return [ScoreVector(self._entries[key]) for key in keys]

    def embed(self, texts: list[str]) -> np.ndarray:
        return self._backend.embed(texts)
