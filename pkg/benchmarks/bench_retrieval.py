#!/usr/bin/env python3
"""Benchmark the compiled scoring kernel against the NumPy fallback.

The package selects a kernel at import time (compiled extension preferred,
``PARC_PURE_PY=1`` forces the fallback). This script imports both modules
side by side, times them on identical retrieval workloads, and reports the
worst score disagreement as a sanity check — the two are expected to agree
to ~1e-12, differing only in speed and in how they micro-batch rows.

Usage: python benchmarks/bench_retrieval.py [--repeats N] [--quick]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

import parc.retrieval
from parc import _kernels_py
from parc.embeddings import build_index, normalize
from parc.retrieval import retrieve_top_k

try:
    from parc import _kernels
except ImportError:  # pragma: no cover - compiler-less installs
    _kernels = None

SHAPES = [(1_000, 64), (10_000, 64), (10_000, 384), (100_000, 128)]
QUICK_SHAPES = SHAPES[:2]
AGREEMENT_LIMIT = 1e-9  # far looser than the observed ~1e-12 bound


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1000.0


def bench_kernels(shapes, repeats: int) -> float:
    print(f"dot-product kernel, best of {repeats} (ms per query)")
    print(f"{'rows':>8}  {'dim':>4}  {'compiled':>9}  {'numpy':>9}  {'ratio':>6}  max|diff|")
    worst = 0.0
    for rows, dim in shapes:
        rng = np.random.default_rng(rows * 31 + dim)
        matrix = rng.standard_normal((rows, dim)).astype(np.float32)
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        query = normalize(rng.standard_normal(dim))
        numpy_ms = _time(lambda: _kernels_py.dot_scores(matrix, query), repeats)
        if _kernels is None:
            print(f"{rows:>8}  {dim:>4}  {'n/a':>9}  {numpy_ms:>9.3f}  {'n/a':>6}")
            continue
        compiled_ms = _time(lambda: _kernels.dot_scores(matrix, query), repeats)
        diff = float(
            np.max(
                np.abs(
                    _kernels.dot_scores(matrix, query)
                    - _kernels_py.dot_scores(matrix, query)
                )
            )
        )
        worst = max(worst, diff)
        ratio = numpy_ms / compiled_ms
        print(
            f"{rows:>8}  {dim:>4}  {compiled_ms:>9.3f}  {numpy_ms:>9.3f}"
            f"  {ratio:>5.2f}x  {diff:.2e}"
        )
    return worst


def bench_top_k(shapes, repeats: int) -> None:
    """End-to-end retrieve_top_k with each kernel swapped in."""
    print(f"\nretrieve_top_k end to end, k=10, best of {repeats} (ms per query)")
    print(f"{'rows':>8}  {'dim':>4}  {'compiled':>9}  {'numpy':>9}")
    original = parc.retrieval.kernels
    try:
        for rows, dim in shapes:
            rng = np.random.default_rng(rows * 37 + dim)
            index = build_index(
                [f"v{i}" for i in range(rows)], rng.standard_normal((rows, dim))
            )
            query = normalize(rng.standard_normal(dim))
            timings = {}
            for name, module in (("compiled", _kernels), ("numpy", _kernels_py)):
                if module is None:
                    timings[name] = None
                    continue
                parc.retrieval.kernels = module
                timings[name] = _time(lambda: retrieve_top_k(index, query, 10), repeats)
            compiled = f"{timings['compiled']:>9.3f}" if timings["compiled"] else f"{'n/a':>9}"
            print(f"{rows:>8}  {dim:>4}  {compiled}  {timings['numpy']:>9.3f}")
    finally:
        parc.retrieval.kernels = original


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--quick", action="store_true", help="small shapes only, for smoke runs"
    )
    args = parser.parse_args()
    shapes = QUICK_SHAPES if args.quick else SHAPES
    if _kernels is None:
        print("compiled kernel unavailable; benchmarking the fallback only\n")
    worst = bench_kernels(shapes, args.repeats)
    bench_top_k(shapes, args.repeats)
    if _kernels is not None:
        print(f"\nworst kernel disagreement: {worst:.2e}")
        if worst > AGREEMENT_LIMIT:
            print(f"FAIL: kernels disagree beyond {AGREEMENT_LIMIT:.0e}")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
