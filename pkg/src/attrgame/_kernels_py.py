"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Accumulation order matches the compiled version element for element, so both
backends return bit-identical results.
"""
import numpy as np

BACKEND = "python"


def indicator_matrix(codes):
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    p, k = codes.shape
    out = np.zeros((p, p), dtype=np.int64)
    for i in range(k):
        col = codes[:, i]
        out += col[:, None] == col[None, :]
    return out


def fictitious_play(matrix, max_iters, target, alternating=True):
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    m, n = matrix.shape
    cols = np.ascontiguousarray(matrix.T)
    xc = np.zeros(m, dtype=np.int64)
    yc = np.zeros(n, dtype=np.int64)
    row_cum = np.zeros(m)
    col_cum = np.zeros(n)
    bx, by = xc.copy(), yc.copy()
    best_gap = np.inf
    best_t = 0
    converged = False
    i = j = 0
    t = 0
    if alternating:
        xc[0] += 1
        col_cum += matrix[0]
    while True:
        # argmin/argmax return the first occurrence: lowest-index tie-breaking
        if alternating:
            j = int(np.argmax(col_cum))
            hi = col_cum[j]
            yc[j] += 1
            row_cum += cols[j]
            t += 1
            i = int(np.argmin(row_cum))
            lo = row_cum[i]
        else:
            xc[i] += 1
            yc[j] += 1
            row_cum += cols[j]
            col_cum += matrix[i]
            t += 1
            i = int(np.argmin(row_cum))
            j = int(np.argmax(col_cum))
            lo, hi = row_cum[i], col_cum[j]
        gap = (hi - lo) / t
        if gap < best_gap:
            best_gap = gap
            best_t = t
            bx[:] = xc
            by[:] = yc
        if gap <= target:
            converged = True
            break
        if t >= max_iters:
            break
        if alternating:
            xc[i] += 1
            col_cum += matrix[i]
    return xc, yc, t, converged, bx, by, best_t, float(best_gap)
