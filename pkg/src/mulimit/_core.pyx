# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping and counting kernels.

Mirrors :mod:`mulimit._core_py` function for function; both operate on dense
int32 state indices and a flat rule table indexed by the mixed-radix code of
the neighbourhood (leftmost cell most significant).
"""
import numpy as np

cimport cython
from libc.stdint cimport int32_t, int64_t


cdef inline void _step_row(const int32_t[::1] table, int q, int r,
                           const int32_t[::1] src, int32_t[::1] dst) noexcept nogil:
    # Rolling neighbourhood code: drop the leftmost digit, shift, append the
    # next cell.  Only the wrap-around lookups pay for a modulo.
    cdef Py_ssize_t w = src.shape[0]
    cdef Py_ssize_t i, j, pos
    cdef int64_t code = 0, top = 1
    cdef int d = 2 * r + 1
    for j in range(d - 1):
        top *= q
    for j in range(-r, r + 1):
        pos = j % w
        if pos < 0:
            pos += w
        code = code * q + src[pos]
    dst[0] = table[code]
    for i in range(1, w):
        pos = i + r
        if pos >= w:
            pos %= w
        j = i - r - 1
        if j < 0:
            j = j % w
            if j < 0:
                j += w
        code = (code - src[j] * top) * q + src[pos]
        dst[i] = table[code]


def step_rows(const int32_t[::1] table, int q, int r, const int32_t[:, ::1] rows):
    """One synchronous cyclic update of every row of a (K, W) batch."""
    cdef Py_ssize_t k = rows.shape[0], w = rows.shape[1], t
    out = np.empty((k, w), dtype=np.int32)
    cdef int32_t[:, ::1] dst = out
    with nogil:
        for t in range(k):
            _step_row(table, q, r, rows[t], dst[t])
    return out


def iterate_rows(const int32_t[::1] table, int q, int r, const int32_t[:, ::1] rows, int steps):
    """Apply ``steps`` cyclic updates to every row, returning the final batch."""
    cdef Py_ssize_t k = rows.shape[0], w = rows.shape[1], t, s
    a = np.array(rows, dtype=np.int32, copy=True)
    b = np.empty_like(a)
    cdef int32_t[:, ::1] cur = a
    cdef int32_t[:, ::1] nxt = b
    cdef int32_t[:, ::1] tmp
    with nogil:
        for s in range(steps):
            for t in range(k):
                _step_row(table, q, r, cur[t], nxt[t])
            tmp = cur
            cur = nxt
            nxt = tmp
    return np.asarray(cur)


def run_trace(const int32_t[::1] table, int q, int r, const int32_t[::1] cells, int steps):
    """Space-time diagram of a single cyclic configuration, shape (steps+1, W)."""
    cdef Py_ssize_t w = cells.shape[0], s
    out = np.empty((steps + 1, w), dtype=np.int32)
    cdef int32_t[:, ::1] rows = out
    rows[0, :] = cells
    with nogil:
        for s in range(steps):
            _step_row(table, q, r, rows[s], rows[s + 1])
    return out


def count_words(const int32_t[:, ::1] rows, int q, int k):
    """Histogram of cyclic length-k word codes per row, shape (K, q**k)."""
    cdef Py_ssize_t n = rows.shape[0], w = rows.shape[1], t, i, j
    cdef int64_t nwords = 1
    for j in range(k):
        nwords *= q
    out = np.zeros((n, nwords), dtype=np.int64)
    cdef int64_t[:, ::1] counts = out
    cdef int64_t code
    with nogil:
        for t in range(n):
            for i in range(w):
                code = 0
                for j in range(k):
                    if i + j < w:
                        code = code * q + rows[t, i + j]
                    else:
                        code = code * q + rows[t, (i + j) % w]
                counts[t, code] += 1
    return out
