# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay numerically identical to ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def indicator_matrix(const long long[:, ::1] codes):
    """Collision counts between all pairs of rows of ``codes`` (p x k)."""
    cdef Py_ssize_t p = codes.shape[0]
    cdef Py_ssize_t k = codes.shape[1]
    cdef Py_ssize_t r, c, i
    cdef long long s
    out = np.empty((p, p), dtype=np.int64)
    cdef long long[:, ::1] m = out
    # row-sequential writes and a branchless count beat exploiting symmetry
    for r in range(p):
        for c in range(p):
            s = 0
            for i in range(k):
                s += codes[r, i] == codes[c, i]
            m[r, c] = s
    return out


def fictitious_play(const double[:, ::1] matrix, long long max_iters, double target,
                    bint alternating=True):
    """Fictitious play; learner minimizes over rows, adversary maximizes over columns.

    Returns (learner_counts, adversary_counts, iterations, converged,
    best_learner_counts, best_adversary_counts, best_iterations, best_gap).
    """
    cdef Py_ssize_t m = matrix.shape[0]
    cdef Py_ssize_t n = matrix.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef long long t = 0, best_t = 0
    cdef double lo, hi, gap, best_gap = np.inf
    cdef bint converged = False

    xc_arr = np.zeros(m, dtype=np.int64)
    yc_arr = np.zeros(n, dtype=np.int64)
    bx_arr = np.zeros(m, dtype=np.int64)
    by_arr = np.zeros(n, dtype=np.int64)
    rc_arr = np.zeros(m, dtype=np.float64)
    cc_arr = np.zeros(n, dtype=np.float64)
    cdef long long[::1] xc = xc_arr
    cdef long long[::1] yc = yc_arr
    cdef long long[::1] bx = bx_arr
    cdef long long[::1] by = by_arr
    cdef double[::1] row_cum = rc_arr
    cdef double[::1] col_cum = cc_arr

    i = 0
    j = 0
    if alternating:
        xc[0] += 1
        for b in range(n):
            col_cum[b] += matrix[0, b]
    while True:
        if alternating:
            j = 0
            hi = col_cum[0]
            for b in range(1, n):
                if col_cum[b] > hi:
                    hi = col_cum[b]
                    j = b
            yc[j] += 1
            for a in range(m):
                row_cum[a] += matrix[a, j]
            t += 1
            i = 0
            lo = row_cum[0]
            for a in range(1, m):
                if row_cum[a] < lo:
                    lo = row_cum[a]
                    i = a
        else:
            xc[i] += 1
            yc[j] += 1
            for a in range(m):
                row_cum[a] += matrix[a, j]
            for b in range(n):
                col_cum[b] += matrix[i, b]
            t += 1
            i = 0
            lo = row_cum[0]
            for a in range(1, m):
                if row_cum[a] < lo:
                    lo = row_cum[a]
                    i = a
            j = 0
            hi = col_cum[0]
            for b in range(1, n):
                if col_cum[b] > hi:
                    hi = col_cum[b]
                    j = b

        gap = (hi - lo) / t
        if gap < best_gap:
            best_gap = gap
            best_t = t
            for a in range(m):
                bx[a] = xc[a]
            for b in range(n):
                by[b] = yc[b]
        if gap <= target:
            converged = True
            break
        if t >= max_iters:
            break
        if alternating:
            xc[i] += 1
            for b in range(n):
                col_cum[b] += matrix[i, b]
    return xc_arr, yc_arr, t, converged, bx_arr, by_arr, best_t, best_gap
