"""Pure-NumPy scoring kernel (fallback when the compiled extension is absent)."""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Dot product of every float32 row against a float32 query, in float64.

    Both inputs are promoted to float64 before multiplying, so this agrees
    with the compiled kernel to a few ulps (the kernels may order the
    additions differently, but both accumulate in double precision). Unlike
    the compiled kernel, BLAS may process row blocks with different
    micro-kernels, so even bitwise-identical rows can score a few ulps apart.
    """
    return matrix.astype(np.float64) @ query.astype(np.float64)
