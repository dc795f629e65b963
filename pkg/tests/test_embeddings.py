import math
import random
import struct

import numpy as np
import pytest

from parc import (
    DataError,
    EmbeddingIndex,
    build_index,
    load_index,
    load_tsv,
    normalize,
    save_index,
)
from parc.embeddings import MAGIC


# --- normalize ---------------------------------------------------------------


def test_normalize_unit_norm():
    rng = random.Random(11)
    for _ in range(100):
        dim = rng.randint(1, 40)
        vec = [rng.uniform(-9, 9) for _ in range(dim)]
        if all(v == 0 for v in vec):
            continue
        out = normalize(vec)
        assert out.dtype == np.float32
        assert math.isclose(float(np.linalg.norm(out.astype(np.float64))), 1.0, abs_tol=1e-5)


def test_normalize_direction_preserved():
    out = normalize([3.0, 4.0])
    assert np.allclose(out, [0.6, 0.8], atol=1e-7)


def test_normalize_uses_float64_internally():
    # A float32 norm of this vector would overflow to inf; float64 must not.
    big = [3e38, 4e38]
    out = normalize(big)
    assert np.allclose(out, [0.6, 0.8], atol=1e-7)


@pytest.mark.parametrize(
    "vec",
    [[0.0, 0.0, 0.0], [1.0, float("nan")], [float("inf"), 1.0], [], [[1.0, 2.0]]],
)
def test_normalize_rejects(vec):
    with pytest.raises(DataError):
        normalize(vec)


# --- index construction ------------------------------------------------------


def test_build_index_normalizes_rows():
    idx = build_index(["a", "b"], [[2.0, 0.0], [0.0, 5.0]])
    assert idx.dim == 2
    assert np.allclose(idx.row("a"), [1.0, 0.0])
    assert np.allclose(idx.row("b"), [0.0, 1.0])


def test_build_index_names_bad_row():
    with pytest.raises(DataError, match="'mid'"):
        build_index(["first", "mid", "last"], [[1.0], [0.0], [2.0]])


def test_build_index_rejects_ragged():
    with pytest.raises(DataError):
        build_index(["a", "b"], [[1.0, 2.0], [1.0]])


def test_build_index_rejects_mismatched_counts():
    with pytest.raises(DataError):
        build_index(["a"], [[1.0], [2.0]])


def test_build_index_rejects_empty():
    with pytest.raises(DataError):
        build_index([], [])


@pytest.mark.parametrize(
    "ids,vectors",
    [
        (("a", "a"), np.eye(2, dtype=np.float32)),  # duplicate ids
        (("a", ""), np.eye(2, dtype=np.float32)),  # empty id
        (("a",), np.eye(2, dtype=np.float32)),  # id/row mismatch
        (("a", "b"), np.eye(2, dtype=np.float64)),  # wrong dtype
        (("a",), np.ones(3, dtype=np.float32)),  # wrong ndim
        (("a", "b"), np.eye(2, dtype=np.float32) * 2),  # not unit norm
    ],
)
def test_index_invariants(ids, vectors):
    with pytest.raises(DataError):
        EmbeddingIndex(ids=ids, vectors=vectors)


def test_index_is_read_only():
    idx = build_index(["a"], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        idx.vectors[0, 0] = 7.0


def test_row_unknown_id():
    idx = build_index(["a"], [[1.0, 0.0]])
    with pytest.raises(DataError, match="'b'"):
        idx.row("b")


# --- binary round trip -------------------------------------------------------


def _random_index(rng, n=None, dim=None):
    n = n or rng.randint(1, 20)
    dim = dim or rng.randint(1, 32)
    ids = [f"id-{rng.randrange(10**9)}-{i}" for i in range(n)]
    vectors = [[rng.uniform(-1, 1) + 0.1 for _ in range(dim)] for _ in range(n)]
    return build_index(ids, vectors)


def test_save_load_roundtrip_is_bit_exact(tmp_path):
    rng = random.Random(99)
    for trial in range(25):
        idx = _random_index(rng)
        path = tmp_path / f"t{trial}.idx"
        save_index(idx, path)
        back = load_index(path)
        assert back.ids == idx.ids
        assert back.vectors.tobytes() == idx.vectors.tobytes()


def test_unicode_ids_roundtrip(tmp_path):
    idx = build_index(["తెలుగు", "kiswahili-ähnlich"], [[1.0, 0.0], [0.0, 1.0]])
    path = tmp_path / "u.idx"
    save_index(idx, path)
    assert load_index(path).ids == ("తెలుగు", "kiswahili-ähnlich")


def test_header_layout(tmp_path):
    idx = build_index(["ab"], [[0.0, 0.0, 1.0]])
    path = tmp_path / "h.idx"
    save_index(idx, path)
    blob = path.read_bytes()
    assert blob[:8] == MAGIC
    dim, count = struct.unpack("<II", blob[8:16])
    assert (dim, count) == (3, 1)
    (id_len,) = struct.unpack("<I", blob[16:20])
    assert id_len == 2 and blob[20:22] == b"ab"
    # 12 payload bytes + 4 checksum bytes, nothing after.
    assert len(blob) == 22 + 12 + 4


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(b"NOTANIDX" + b"\x00" * 32)
    with pytest.raises(DataError, match="bad magic"):
        load_index(path)


def test_load_rejects_truncation_at_every_length(tmp_path):
    idx = build_index(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    path = tmp_path / "full.idx"
    save_index(idx, path)
    blob = path.read_bytes()
    cut = tmp_path / "cut.idx"
    for length in range(len(blob)):
        cut.write_bytes(blob[:length])
        with pytest.raises(DataError):
            load_index(cut)


def test_load_rejects_payload_corruption(tmp_path):
    idx = build_index(["a"], [[1.0, 0.0]])
    path = tmp_path / "c.idx"
    save_index(idx, path)
    blob = bytearray(path.read_bytes())
    blob[-6] ^= 0xFF  # flip a payload byte, leave the checksum alone
    path.write_bytes(bytes(blob))
    with pytest.raises(DataError, match="checksum"):
        load_index(path)


def test_load_rejects_trailing_bytes(tmp_path):
    idx = build_index(["a"], [[1.0, 0.0]])
    path = tmp_path / "t.idx"
    save_index(idx, path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(DataError, match="trailing"):
        load_index(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_index(tmp_path / "absent.idx")


# --- TSV ingestion -----------------------------------------------------------


def test_load_tsv(tmp_path):
    path = tmp_path / "e.tsv"
    path.write_text("a\t3.0,4.0\nb\t0.0,2.0\n")
    idx = load_tsv(path)
    assert idx.ids == ("a", "b")
    assert np.allclose(idx.row("a"), [0.6, 0.8], atol=1e-7)


def test_load_tsv_matches_toy_index(toy_dir):
    from_tsv = load_tsv(toy_dir / "pool_embeddings.tsv")
    from_bin = load_index(toy_dir / "pool.idx")
    assert from_tsv.ids == from_bin.ids
    assert from_tsv.vectors.tobytes() == from_bin.vectors.tobytes()


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("a\t1.0\tx\n", "exactly one tab"),
        ("a 1.0,2.0\n", "exactly one tab"),
        ("a\t1.0,zzz\n", "non-numeric"),
        ("a\t1.0,2.0\nb\t1.0\n", "inconsistent vector lengths"),
        ("", "no rows"),
        ("a\t0.0,0.0\n", "zero vector"),
    ],
)
def test_load_tsv_rejects(tmp_path, content, fragment):
    path = tmp_path / "bad.tsv"
    path.write_text(content)
    with pytest.raises(DataError, match=fragment):
        load_tsv(path)
