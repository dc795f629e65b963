#!/usr/bin/env python3
"""(Re)generate the .sha256 companion for every bundled fixture file.

Run after any intentional fixture change; loading rejects files whose digest
does not match.
"""

import hashlib
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "parc" / "fixtures"


def main() -> None:
    for path in sorted(FIXTURE_DIR.glob("*.jsonl")):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        path.with_suffix(".sha256").write_text(digest + "\n", encoding="utf-8")
        print(f"{digest}  {path.name}")


if __name__ == "__main__":
    main()
