"""Sampled word frequencies along CA orbits of Bernoulli-random configurations.

Each trial is a cyclic configuration of width ``W`` drawn cell-i.i.d. from the
measure.  As long as ``W >= k + 2rN`` the dependency cone of a length-``k``
window never wraps within ``N`` steps, so the per-position frequency is an
unbiased estimate of the exact image measure of the cylinder.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import kernels
from .ca import CellularAutomaton, all_neighbourhoods
from .errors import AlphabetError, PreconditionError

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
RNG_NAME = "numpy.random.Philox"


@dataclass(frozen=True)
class SamplingPlan:
    width: int
    trials: int
    horizon: int
    seed: int = 0
    k: int = 1
    words: tuple[tuple[str, ...], ...] | None = None
    threads: int = 1

    def required_width(self, radius: int) -> int:
        return self.k + 2 * radius * self.horizon


def default_plan(ca: CellularAutomaton, horizon: int, k: int, seed: int = 0, words=None) -> SamplingPlan:
    width, trials = 4096, 200
    if ca.q > 4:
        trials = 64
        log.info("alphabet of size %d: sampling plan scaled down to %d trials", ca.q, trials)
    width = max(width, k + 2 * ca.radius * horizon)
    if words is not None:
        words = tuple(tuple(w) for w in words)
        k = max(k, max(len(w) for w in words))
    return SamplingPlan(width, trials, horizon, seed, k, words)


@dataclass
class FrequencySeries:
    words: list[tuple[str, ...]]
    estimates: dict  # word -> float array over n = 0..N
    halfwidths: dict  # word -> 95% CI half-width per n
    sums: dict  # word -> int64 array: total occurrences over all trials per n
    trials: int
    width: int
    seed: int
    horizon: int
    rng: str = RNG_NAME
    meta: dict = field(default_factory=dict)

    def rows(self):
        for w in self.words:
            name = "".join(w) if all(len(a) == 1 for a in w) else " ".join(w)
            for n in range(self.horizon + 1):
                yield name, n, float(self.estimates[w][n]), float(self.halfwidths[w][n]), self.trials, self.seed

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["word", "n", "estimate", "ci_halfwidth", "trials", "seed"])
            for row in self.rows():
                out.writerow(row)


def _tracked_words(ca, plan):
    if plan.words is None:
        return [tuple(ca.decode(row)) for row in all_neighbourhoods(ca.q, plan.k).tolist()]
    words = [tuple(str(a) for a in w) for w in plan.words]
    for w in words:
        if not w or len(w) > plan.k:
            raise PreconditionError(f"tracked word {w} must have length 1..{plan.k}")
        for a in w:
            if a not in ca.alphabet:
                raise AlphabetError(f"tracked word uses unknown symbol {a!r}")
    return words


def _word_columns(ca, word, k):
    """Histogram columns whose length-k word starts with ``word``."""
    prefix = 0
    for a in word:
        prefix = prefix * ca.q + ca.index(a)
    span = ca.q ** (k - len(word))
    return prefix * span, (prefix + 1) * span


def sample_series(ca: CellularAutomaton, mu, plan: SamplingPlan) -> FrequencySeries:
    """Estimate the frequency of each tracked word at every step 0..N.

    Words shorter than ``plan.k`` are counted by summing the histogram of
    their length-``k`` extensions, which is exact on cyclic configurations.
    """
    if mu.alphabet != ca.alphabet:
        raise AlphabetError("measure and automaton use different alphabets")
    need = plan.required_width(ca.radius)
    if plan.width < need:
        raise PreconditionError(f"sampling width {plan.width} too small: need W >= {need}")
    if plan.trials < 1 or plan.horizon < 0:
        raise PreconditionError("trials must be positive and horizon non-negative")
    words = _tracked_words(ca, plan)
    cols = [_word_columns(ca, w, plan.k) for w in words]

    rng = np.random.Generator(np.random.Philox(plan.seed))
    rows = rng.choice(ca.q, size=(plan.trials, plan.width), p=mu.as_floats()).astype(np.int32)

    nsteps = plan.horizon + 1
    s1 = np.zeros((len(words), nsteps), dtype=np.int64)
    s2 = np.zeros((len(words), nsteps), dtype=object)

    chunks = np.array_split(np.arange(plan.trials), max(1, min(plan.threads, plan.trials)))
    chunk_rows = [np.ascontiguousarray(rows[c]) for c in chunks]

    def tally(n):
        for batch in chunk_rows:
            hist = kernels.count_words(batch, ca.q, plan.k)
            csum = np.concatenate([np.zeros((hist.shape[0], 1), dtype=np.int64), np.cumsum(hist, axis=1)], axis=1)
            for j, (lo, hi) in enumerate(cols):
                per_trial = csum[:, hi] - csum[:, lo]
                s1[j, n] += int(per_trial.sum())
                s2[j, n] += int((per_trial.astype(object) ** 2).sum())

    def advance(batch):
        return kernels.step_rows(ca.table, ca.q, ca.radius, batch)

    pool = ThreadPoolExecutor(plan.threads) if plan.threads > 1 else None
    try:
        for n in range(nsteps):
            tally(n)
            if n < plan.horizon:
                if pool is None:
                    chunk_rows = [advance(b) for b in chunk_rows]
                else:
                    chunk_rows = list(pool.map(advance, chunk_rows))
    finally:
        if pool is not None:
            pool.shutdown()

    k_trials, w = plan.trials, plan.width
    estimates, halfwidths, sums = {}, {}, {}
    for j, word in enumerate(words):
        mean = s1[j] / (k_trials * w)
        if k_trials > 1:
            var = np.array(
                [float((s2[j, n] - s1[j, n] * s1[j, n] / k_trials) / (k_trials - 1)) for n in range(nsteps)]
            ) / w**2
            hw = Z95 * np.sqrt(np.maximum(var, 0.0) / k_trials)
        else:
            hw = np.full(nsteps, math.inf)
        estimates[word], halfwidths[word], sums[word] = mean, hw, s1[j].copy()
    return FrequencySeries(words, estimates, halfwidths, sums, k_trials, w, plan.seed, plan.horizon)


@dataclass(frozen=True)
class DecayFit:
    trend: str  # "decreasing" | "flat" | "increasing"
    half_life: int | None
    tau: float
    pvalue: float


def decay_fit(series: Sequence[float], alpha: float = 0.05) -> DecayFit:
    """Kendall trend test on the tail half of a frequency series.

    A half-life (first step where the series is at most half its initial
    value) is reported only when the whole tail decays at least as fast as
    ``n ** -1/2``, i.e. ``f[n] <= f[n // 2] / sqrt(2)``.
    """
    values = np.asarray(series, dtype=float)
    if values.shape[0] < 8:
        raise PreconditionError("decay_fit needs a series of length at least 8")
    start = values.shape[0] // 2
    tail = values[start:]
    if np.ptp(tail) == 0:
        return DecayFit("flat", None, 0.0, 1.0)
    res = stats.kendalltau(np.arange(tail.shape[0]), tail)
    tau, p = float(res.statistic), float(res.pvalue)
    if p < alpha and tau < 0:
        trend = "decreasing"
    elif p < alpha and tau > 0:
        trend = "increasing"
    else:
        trend = "flat"
    half_life = None
    ns = range(max(start, 2), values.shape[0])
    if trend == "decreasing" and all(values[n] <= values[n // 2] / math.sqrt(2) for n in ns):
        below = np.flatnonzero(values <= values[0] / 2)
        half_life = int(below[0]) if below.size else None
    return DecayFit(trend, half_life, tau, p)
