# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled scoring kernel: float32 rows × float32 query, float64 accumulation.

Agrees with the pure-NumPy fallback to a few ulps: both compute each product
in double precision, differing only in summation order (serial here, blocked
in NumPy's matmul). This kernel scores every row with the identical serial
loop, so bitwise-equal rows always receive bitwise-equal scores; BLAS does
not make that promise (its row-block micro-kernels can split duplicates by
a few ulps), which is one reason this is the preferred backend.
"""

import numpy as np

BACKEND = "cython"


def dot_scores(const float[:, ::1] matrix, const float[::1] query):
    """Dot product of every row of `matrix` against `query`, as float64."""
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t dim = matrix.shape[1]
    if query.shape[0] != dim:
        raise ValueError(f"query has {query.shape[0]} dims, matrix rows have {dim}")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_view = out
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(dim):
            acc += <double> matrix[i, j] * <double> query[j]
        out_view[i] = acc
    return out
