"""Embedding storage: normalized float32 matrices with a binary on-disk format.

Vectors are stored row-major float32, always unit-normalized (the dot product
of two rows is their cosine). The file format is little-endian throughout and
carries a CRC32 of the vector payload so corruption is detected at load time.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"PARCIDX1"
_NORM_TOLERANCE = 1e-5


@dataclass(frozen=True)
class EmbeddingIndex:
    """Aligned (ids, vectors): row i of `vectors` embeds `ids[i]`.

    Invariants, enforced at construction: float32 2-D matrix, one row per id,
    unique non-empty ids, every row unit-norm within 1e-5. The array is marked
    read-only so shared indices cannot drift.
    """

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.vectors, np.ndarray) or self.vectors.ndim != 2:
            raise DataError("vectors must be a 2-D array")
        if self.vectors.dtype != np.float32:
            raise DataError(f"vectors must be float32, got {self.vectors.dtype}")
        if len(self.ids) != self.vectors.shape[0]:
            raise DataError(
                f"{len(self.ids)} ids but {self.vectors.shape[0]} vector rows"
            )
        if len(self.ids) == 0:
            raise DataError("index must contain at least one vector")
        if self.vectors.shape[1] == 0:
            raise DataError("vectors must have at least one dimension")
        if any(not isinstance(i, str) or not i for i in self.ids):
            raise DataError("ids must be non-empty strings")
        if len(set(self.ids)) != len(self.ids):
            raise DataError("duplicate ids in index")
        if not np.all(np.isfinite(self.vectors)):
            raise DataError("index contains non-finite values")
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > _NORM_TOLERANCE)
        if bad.size:
            raise DataError(
                f"row for id {self.ids[bad[0]]!r} is not unit-norm "
                f"(norm={norms[bad[0]]!r})"
            )
        self.vectors.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def row(self, sample_id: str) -> np.ndarray:
        try:
            return self.vectors[self.ids.index(sample_id)]
        except ValueError:
            raise DataError(f"id {sample_id!r} not in index") from None


def normalize(vector: np.ndarray | list[float]) -> np.ndarray:
    """Scale a vector to unit L2 norm, in float64, returning float32.

    Zero vectors and non-finite entries have no meaningful direction and are
    rejected rather than silently passed through.
    """
    arr = np.asarray(vector, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"expected a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError("cannot normalize an empty vector")
    if not np.all(np.isfinite(arr)):
        raise DataError("cannot normalize a vector with non-finite entries")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise DataError("cannot normalize a zero vector")
    return (arr / norm).astype(np.float32)


def build_index(ids: list[str], vectors: list[list[float]] | np.ndarray) -> EmbeddingIndex:
    """Assemble an index, normalizing every row; reports bad rows by id."""
    if len(ids) != len(vectors):
        raise DataError(f"{len(ids)} ids but {len(vectors)} vectors")
    if not ids:
        raise DataError("index must contain at least one vector")
    try:
        matrix = np.asarray(vectors, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError(f"vectors are ragged or non-numeric: {exc}") from exc
    if matrix.ndim != 2:
        raise DataError(f"expected a matrix of vectors, got shape {matrix.shape}")
    rows = []
    for sample_id, row in zip(ids, matrix):
        try:
            rows.append(normalize(row))
        except DataError as exc:
            raise DataError(f"vector for id {sample_id!r}: {exc}") from None
    return EmbeddingIndex(ids=tuple(ids), vectors=np.stack(rows))


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    """Serialize an index to the binary format (bit-exact round trip)."""
    payload = index.vectors.astype("<f4").tobytes()
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", index.dim, len(index)))
        for sample_id in index.ids:
            encoded = sample_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_index(path: str | Path) -> EmbeddingIndex:
    """Read an index file, verifying structure and payload checksum."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"index file not found: {path}")
    blob = path.read_bytes()

    def take(offset: int, count: int, what: str) -> tuple[bytes, int]:
        if offset + count > len(blob):
            raise DataError(f"{path}: truncated while reading {what}")
        return blob[offset : offset + count], offset + count

    header, offset = take(0, len(MAGIC), "magic")
    if header != MAGIC:
        raise DataError(f"{path}: bad magic {header!r}, not an index file")
    raw, offset = take(offset, 8, "header")
    dim, count = struct.unpack("<II", raw)
    if dim == 0 or count == 0:
        raise DataError(f"{path}: empty index (dim={dim}, count={count})")
    ids = []
    for i in range(count):
        raw, offset = take(offset, 4, f"id length {i}")
        (id_len,) = struct.unpack("<I", raw)
        raw, offset = take(offset, id_len, f"id {i}")
        try:
            ids.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: id {i} is not valid UTF-8: {exc}") from exc
    payload, offset = take(offset, dim * count * 4, "vector payload")
    raw, offset = take(offset, 4, "checksum")
    (stored_crc,) = struct.unpack("<I", raw)
    if zlib.crc32(payload) != stored_crc:
        raise DataError(f"{path}: payload checksum mismatch, file is corrupt")
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes after checksum")
    vectors = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(count, dim)
    return EmbeddingIndex(ids=tuple(ids), vectors=vectors)


def load_tsv(path: str | Path) -> EmbeddingIndex:
    """Ingest `id<TAB>v1,v2,...` rows and build a normalized index."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"embedding TSV not found: {path}")
    ids: list[str] = []
    vectors: list[list[float]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            sample_id, values = line.split("\t")
        except ValueError:
            raise DataError(
                f"{path}:{lineno}: expected exactly one tab separating id and values"
            ) from None
        try:
            vector = [float(v) for v in values.split(",")]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric value: {exc}") from exc
        ids.append(sample_id)
        vectors.append(vector)
    if not ids:
        raise DataError(f"{path}: no rows")
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise DataError(f"{path}: inconsistent vector lengths {sorted(lengths)}")
    return build_index(ids, vectors)
