"""Pure numpy kernels; same signatures and results as the compiled ``_core``."""

import numpy as np


def _codes(rows, q, offsets):
    code = np.zeros(rows.shape, dtype=np.int64)
    for off in offsets:
        code = code * q + np.roll(rows, -off, axis=-1)
    return code


def step_rows(table, q, r, rows):
    rows = np.asarray(rows, dtype=np.int32)
    return np.asarray(table, dtype=np.int32)[_codes(rows, q, range(-r, r + 1))]


def iterate_rows(table, q, r, rows, steps):
    out = np.array(rows, dtype=np.int32, copy=True)
    for _ in range(steps):
        out = step_rows(table, q, r, out)
    return out


def run_trace(table, q, r, cells, steps):
    cells = np.asarray(cells, dtype=np.int32)
    out = np.empty((steps + 1, cells.shape[0]), dtype=np.int32)
    out[0] = cells
    for s in range(steps):
        out[s + 1] = step_rows(table, q, r, out[s])
    return out


def count_words(rows, q, k):
    rows = np.asarray(rows, dtype=np.int32)
    n = rows.shape[0]
    nwords = q**k
    code = _codes(rows, q, range(k))
    code += (np.arange(n, dtype=np.int64) * nwords)[:, None]
    return np.bincount(code.ravel(), minlength=n * nwords).reshape(n, nwords)
