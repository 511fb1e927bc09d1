"""Space-time diagrams as plain PGM images and CSV tables."""

from __future__ import annotations

import csv

import numpy as np


def write_pgm(rows: np.ndarray, q: int, path) -> None:
    """ASCII (P2) greymap, one pixel per cell, grey level = state index."""
    rows = np.asarray(rows)
    height, width = rows.shape
    maxval = max(q - 1, 1)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{width} {height}\n{maxval}\n")
        for row in rows:
            fh.write(" ".join(map(str, row.tolist())) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise ValueError("not an ASCII PGM file")
    width, height = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4:], dtype=np.int64).reshape(height, width)


def write_trace_csv(rows: np.ndarray, alphabet, path) -> None:
    rows = np.asarray(rows)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + [f"cell{i}" for i in range(rows.shape[1])])
        for t, row in enumerate(rows.tolist()):
            out.writerow([t] + [alphabet[x] for x in row])
