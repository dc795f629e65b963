"""Bundled reference tables, checksum-verified at load time.

Each fixture is a JSON-lines file whose first line is metadata (`name`,
`source`) and whose remaining lines are data rows, paired with a `.sha256`
file holding the hex digest of the exact bytes. Loading recomputes the digest
so silent edits to the bundled numbers are impossible.

Bundled fixtures:

* ``langsim_10`` — per-feature and aggregate similarity of ten low-resource
  target languages to English, with wiki size buckets.
* ``fifty_pairs`` — 50 source→target transfer pairs: accuracy under both
  neighbor-label modes plus similarity features and wiki sizes.
* ``overview`` — headline accuracy table (methods × tasks).
* ``correlation_reference`` — correlation coefficients and significance flags
  for accuracy vs similarity/wiki-size, both modes, both methods.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

DATA_DIR = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class ReferenceFixture:
    name: str
    source: str
    rows: tuple[dict, ...]


def fixture_names() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.jsonl"))


def load_fixture(name: str | Path) -> ReferenceFixture:
    """Load a bundled fixture by name, or any fixture-format file by path."""
    name = str(name)
    if "/" in name or name.endswith(".jsonl"):
        path = Path(name)
    else:
        path = DATA_DIR / f"{name}.jsonl"
    if not path.is_file():
        raise DataError(
            f"unknown fixture {name!r} (bundled: {', '.join(fixture_names())})"
        )
    digest_path = path.with_suffix(".sha256")
    if not digest_path.is_file():
        raise DataError(f"fixture {path} has no .sha256 companion")
    blob = path.read_bytes()
    expected = digest_path.read_text(encoding="utf-8").split()[0]
    actual = hashlib.sha256(blob).hexdigest()
    if actual != expected:
        raise DataError(
            f"fixture {path} fails its checksum (have {actual[:12]}…, "
            f"want {expected[:12]}…); the bundled data was modified"
        )
    lines = [line for line in blob.decode("utf-8").splitlines() if line.strip()]
    if not lines:
        raise DataError(f"fixture {path} is empty")
    try:
        meta = json.loads(lines[0])
        rows = tuple(json.loads(line) for line in lines[1:])
    except json.JSONDecodeError as exc:
        raise DataError(f"fixture {path} has invalid JSON: {exc}") from exc
    if not isinstance(meta, dict) or "name" not in meta or "source" not in meta:
        raise DataError(f"fixture {path} first line must carry name and source")
    if not all(isinstance(row, dict) for row in rows):
        raise DataError(f"fixture {path} data rows must be objects")
    if not rows:
        raise DataError(f"fixture {path} has no data rows")
    return ReferenceFixture(name=str(meta["name"]), source=str(meta["source"]), rows=rows)
