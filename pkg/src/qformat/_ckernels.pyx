# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled block quantization kernels.

Must stay bit-identical to ``_pykernels``: same nearest-value search, same
tie rule, same Neumaier summation order.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline Py_ssize_t _nearest(double q, const double* v, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    cdef double d_lo, d_hi
    # first index with v[j] >= q
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] < q:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        return 0
    if lo == n:
        return n - 1
    d_lo = q - v[lo - 1]
    d_hi = v[lo] - q
    if d_hi < d_lo:
        return lo
    if d_lo < d_hi:
        return lo - 1
    if fabs(v[lo]) < fabs(v[lo - 1]):
        return lo
    return lo - 1


def encode(const double[::1] q, const double[::1] values):
    """Nearest-value index of every element of ``q``."""
    cdef Py_ssize_t n = q.shape[0], m = values.shape[0], i
    out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] idx = out
    with nogil:
        for i in range(n):
            idx[i] = <cnp.uint8_t>_nearest(q[i], &values[0], m)
    return out


cdef inline double _block_sse(const double* x, Py_ssize_t n, double scale,
                              const double* v, Py_ssize_t m) noexcept nogil:
    cdef double total = 0.0, comp = 0.0, e, sq, t
    cdef Py_ssize_t i
    for i in range(n):
        e = x[i] - scale * v[_nearest(x[i] / scale, v, m)]
        sq = e * e
        t = total + sq
        if fabs(total) >= fabs(sq):
            comp += (total - t) + sq
        else:
            comp += (sq - t) + total
        total = t
    return total + comp


def quantize_blocks(const double[:, ::1] x, Py_ssize_t block,
                    const double[::1] values, const double[::1] ratios,
                    Py_ssize_t zero_index):
    """Absmax block quantization of each row, with a scale-ratio search.

    Returns ``(indices, scales, chosen_ratios)``; blocks run along the last
    axis and the final block of a row may be short.
    """
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1]
    cdef Py_ssize_t nb = (cols + block - 1) // block
    cdef Py_ssize_t m = values.shape[0], nr = ratios.shape[0]
    cdef Py_ssize_t r, b, i, k, start, length
    cdef double absmax, a, best_sse, best_ratio, sse, scale
    cdef const double* v = &values[0]
    cdef const double* row

    idx_arr = np.empty((rows, cols), dtype=np.uint8)
    scale_arr = np.empty((rows, nb), dtype=np.float64)
    ratio_arr = np.empty((rows, nb), dtype=np.float64)
    cdef cnp.uint8_t[:, ::1] idx = idx_arr
    cdef double[:, ::1] scales = scale_arr
    cdef double[:, ::1] chosen = ratio_arr

    with nogil:
        for r in range(rows):
            row = &x[r, 0]
            for b in range(nb):
                start = b * block
                length = block if start + block <= cols else cols - start
                absmax = 0.0
                for i in range(length):
                    a = fabs(row[start + i])
                    if a > absmax:
                        absmax = a
                if absmax == 0.0:
                    scales[r, b] = 1.0
                    chosen[r, b] = 1.0
                    for i in range(length):
                        idx[r, start + i] = <cnp.uint8_t>zero_index
                    continue
                best_ratio = ratios[0]
                if nr > 1:
                    best_sse = _block_sse(row + start, length, absmax * ratios[0], v, m)
                    for k in range(1, nr):
                        sse = _block_sse(row + start, length, absmax * ratios[k], v, m)
                        if sse < best_sse or (sse == best_sse and ratios[k] > best_ratio):
                            best_sse = sse
                            best_ratio = ratios[k]
                scale = absmax * best_ratio
                scales[r, b] = scale
                chosen[r, b] = best_ratio
                for i in range(length):
                    idx[r, start + i] = <cnp.uint8_t>_nearest(row[start + i] / scale, v, m)
    return idx_arr, scale_arr, ratio_arr
