"""Exact Bernoulli cylinder measures and their images under CA iteration.

Everything here is exact: probabilities are :class:`fractions.Fraction` and
the preimage dynamic programme accumulates integer weights over a common
denominator, so conservation and oracle checks are plain equalities.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ca import CellularAutomaton, Word, all_neighbourhoods, encode_word
from .errors import AlphabetError, CostCapExceeded, PreconditionError, RuleParseError

log = logging.getLogger(__name__)

DEFAULT_COST_CAP = 10**7
DEFAULT_WORD_CAP = 10**5

VANISHING = "VANISHING-TREND"
PERSISTENT = "PERSISTENT-AT-HORIZON"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class BernoulliMeasure:
    alphabet: tuple[str, ...]
    probabilities: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(Fraction(p) for p in self.probabilities)
        if len(probs) != len(self.alphabet):
            raise PreconditionError("one probability per alphabet symbol is required")
        if any(p < 0 for p in probs):
            raise PreconditionError("probabilities must be non-negative")
        if sum(probs) != 1:
            raise PreconditionError(f"probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def uniform(cls, alphabet: Sequence[str]) -> "BernoulliMeasure":
        q = len(alphabet)
        return cls(tuple(alphabet), (Fraction(1, q),) * q)

    @classmethod
    def from_mapping(cls, alphabet: Sequence[str], probs: dict) -> "BernoulliMeasure":
        extra = set(probs) - set(alphabet)
        if extra:
            raise AlphabetError(f"measure names symbols outside the alphabet: {sorted(extra)}")
        return cls(tuple(alphabet), tuple(Fraction(probs.get(a, 0)) for a in alphabet))

    @classmethod
    def from_document(cls, alphabet: Sequence[str], doc) -> "BernoulliMeasure":
        """``"uniform"`` or ``{"probabilities": {"0": "1/5", ...}}``."""
        if doc == "uniform" or (isinstance(doc, dict) and doc.get("uniform") is True):
            return cls.uniform(alphabet)
        if not isinstance(doc, dict) or not isinstance(doc.get("probabilities"), dict):
            raise RuleParseError("measure document needs a 'probabilities' object", "document")
        parsed = {}
        for key, value in doc["probabilities"].items():
            try:
                parsed[key] = Fraction(str(value))
            except (ValueError, ZeroDivisionError):
                raise RuleParseError(f"bad rational {value!r}", f"probabilities[{key!r}]") from None
        try:
            return cls.from_mapping(alphabet, parsed)
        except PreconditionError as exc:
            raise RuleParseError(str(exc), "probabilities") from None

    def to_document(self) -> dict:
        return {"probabilities": {a: str(p) for a, p in zip(self.alphabet, self.probabilities)}}

    @property
    def complete(self) -> bool:
        return all(p > 0 for p in self.probabilities)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.probabilities)) == 1

    def integer_weights(self) -> tuple[tuple[int, ...], int]:
        """Numerators over the least common denominator: ``p_a = c_a / d``."""
        d = math.lcm(*(p.denominator for p in self.probabilities))
        return tuple(int(p * d) for p in self.probabilities), d

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probabilities])


def _check_measure(ca: CellularAutomaton, mu: BernoulliMeasure):
    if mu.alphabet != ca.alphabet:
        raise AlphabetError("measure and automaton use different alphabets")


def cylinder_measure(mu: BernoulliMeasure, u: Word) -> Fraction:
    codes = encode_word(mu.alphabet, u)
    value = Fraction(1)
    for x in codes:
        value *= mu.probabilities[x]
    return value


# -- preimage dynamic programme ------------------------------------------------

@dataclass
class _DPOutcome:
    total: int
    witness: tuple[int, ...] | None
    spent: int


def _warmup_cost(q: int, r: int, n: int, m: int) -> int:
    """Transitions spent before any output can prune the frontier."""
    free = min(2 * r * n, m)
    return sum(q ** (i + 1) for i in range(free))


def _preimage_dp(
    ca: CellularAutomaton,
    target: Sequence[int],
    n: int,
    weights: Sequence[int],
    cap: int,
    fixed: dict[int, int] | None = None,
    want_witness: bool = False,
) -> _DPOutcome:
    """Weighted count of words ``x`` of length ``|target| + 2rn`` with ``A^n(x) = target``.

    The scan reads ``x`` left to right.  Its state is, for every level
    ``t < n``, the last ``2r`` symbols of the level-``t`` row computed so far;
    each new symbol ripples up through the levels and the level-``n`` output
    must agree with ``target``.  Prefixes with equal state are merged, so the
    frontier never exceeds ``q**(2rn)``.
    """
    q, r = ca.q, ca.radius
    d = 2 * r
    m = len(target) + d * n
    fixed = fixed or {}
    table = ca.table.astype(np.int64)
    powers = q ** np.arange(d - 1, -1, -1, dtype=np.int64)

    bound = sum(weights) ** m
    wdtype = np.int64 if bound < 2**62 else object
    sym_all = np.array([a for a in range(q) if weights[a] != 0], dtype=np.int32)
    w_of = np.array(weights, dtype=wdtype)

    states = np.zeros((1, n, d), dtype=np.int32)
    acc = np.ones(1, dtype=wdtype)
    wit = np.zeros((1, 0), dtype=np.int32) if want_witness else None
    spent = 0
    target = np.asarray(target, dtype=np.int64)

    for i in range(m):
        if i in fixed:
            syms = np.array([fixed[i]] if weights[fixed[i]] else [], dtype=np.int32)
        else:
            syms = sym_all
        s, k = states.shape[0], syms.shape[0]
        spent += s * k
        if spent > cap:
            raise CostCapExceeded(cap, spent)
        st = np.repeat(states, k, axis=0)
        cur = np.tile(syms, s).astype(np.int64)
        acc_new = np.repeat(acc, k) * np.tile(w_of[syms], s)
        if wit is not None:
            wit = np.concatenate([np.repeat(wit, k, axis=0), cur[:, None].astype(np.int32)], axis=1)
        reached = True
        for t in range(n):
            ready = i - d * t >= d
            if ready:
                code = (st[:, t, :].astype(np.int64) * powers).sum(axis=1) * q + cur if d else cur
                up = table[code]
            if d:
                st[:, t, :-1] = st[:, t, 1:]
                st[:, t, -1] = cur
            if not ready:
                reached = False
                break
            cur = up
        if reached:
            keep = cur == target[i - d * n]
            st, acc_new = st[keep], acc_new[keep]
            if wit is not None:
                wit = wit[keep]
        if st.shape[0] == 0:
            return _DPOutcome(0, None, spent)
        flat = st.reshape(st.shape[0], -1)
        if flat.shape[1] == 0:
            uniq_idx = np.zeros(st.shape[0], dtype=np.int64)
            first = np.array([0])
        else:
            _, first, uniq_idx = np.unique(flat, axis=0, return_index=True, return_inverse=True)
            uniq_idx = uniq_idx.ravel()
        order = np.argsort(uniq_idx, kind="stable")
        starts = np.searchsorted(uniq_idx[order], np.arange(first.shape[0]))
        acc = np.add.reduceat(acc_new[order], starts)
        states = st[first]
        if wit is not None:
            wit = wit[first]
    total = int(sum(acc.tolist()))
    witness = tuple(int(x) for x in wit[0]) if (wit is not None and total > 0) else None
    return _DPOutcome(total, witness, spent)


# -- pushforward -----------------------------------------------------------------

@dataclass(frozen=True)
class PushforwardResult:
    word: tuple[str, ...]
    steps: int
    value: Fraction
    preimage_count: int | None = None


def pushforward_cylinder(
    ca: CellularAutomaton,
    mu: BernoulliMeasure,
    u: Word,
    n: int,
    cap: int = DEFAULT_COST_CAP,
) -> PushforwardResult:
    """Exact value of the image measure ``A^n mu`` on the cylinder ``[u]``."""
    _check_measure(ca, mu)
    if n < 0:
        raise PreconditionError("step count must be non-negative")
    codes = ca.encode(u)
    weights, d = mu.integer_weights()
    m = len(codes) + 2 * ca.radius * n
    warm = _warmup_cost(sum(1 for c in weights if c), ca.radius, n, m)
    if warm > cap:
        raise CostCapExceeded(cap, warm)
    res = _preimage_dp(ca, codes, n, weights, cap)
    value = Fraction(res.total, d**m)
    count = res.total if mu.is_uniform else None
    return PushforwardResult(ca.decode(codes), n, value, count)


def _image_dp(ca: CellularAutomaton, k: int, n: int, weights: Sequence[int], cap: int) -> dict[tuple[int, ...], int]:
    """Weighted preimage counts of every length-``k`` word in one scan.

    Same left-to-right scan as :func:`_preimage_dp`, except that level-``n``
    outputs are kept as part of the frontier key instead of being matched
    against a fixed target.  Words with no preimage are absent.
    """
    q, r = ca.q, ca.radius
    d = 2 * r
    m = k + d * n
    table = ca.table.astype(np.int64)
    powers = q ** np.arange(d - 1, -1, -1, dtype=np.int64)
    wdtype = np.int64 if sum(weights) ** m < 2**62 else object
    syms = np.array([a for a in range(q) if weights[a] != 0], dtype=np.int32)
    w_of = np.array(weights, dtype=wdtype)

    states = np.zeros((1, n * d + k), dtype=np.int32)  # level windows, then outputs
    acc = np.ones(1, dtype=wdtype)
    spent = 0
    for i in range(m):
        s, b = states.shape[0], syms.shape[0]
        spent += s * b
        if spent > cap:
            raise CostCapExceeded(cap, spent)
        st = np.repeat(states, b, axis=0)
        cur = np.tile(syms, s).astype(np.int64)
        acc_new = np.repeat(acc, b) * np.tile(w_of[syms], s)
        reached = True
        for t in range(n):
            win = st[:, t * d:(t + 1) * d]
            ready = i - d * t >= d
            if ready:
                up = table[(win.astype(np.int64) * powers).sum(axis=1) * q + cur] if d else table[cur]
            if d:
                win[:, :-1] = win[:, 1:]
                win[:, -1] = cur
            if not ready:
                reached = False
                break
            cur = up
        if reached:
            st[:, n * d + i - d * n] = cur
        _, first, inv = np.unique(st, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        starts = np.searchsorted(inv[order], np.arange(first.shape[0]))
        acc = np.add.reduceat(acc_new[order], starts)
        states = st[first]
    out: dict[tuple[int, ...], int] = {}
    for row, a in zip(states[:, n * d:].tolist(), acc.tolist()):
        key = tuple(row)
        out[key] = out.get(key, 0) + int(a)
    return out


def pushforward_distribution(
    ca: CellularAutomaton,
    mu: BernoulliMeasure,
    k: int,
    n: int,
    cap: int = DEFAULT_COST_CAP,
    word_cap: int = DEFAULT_WORD_CAP,
) -> dict[tuple[str, ...], Fraction]:
    """Exact ``A^n mu [w]`` for every word ``w`` of length ``k``.

    Computed by a single joint scan, so the cost does not multiply by the
    number of words.  Words of measure zero are included with value 0.
    """
    _check_measure(ca, mu)
    if n < 0 or k < 1:
        raise PreconditionError("need k >= 1 and n >= 0")
    if ca.q**k > word_cap:
        raise CostCapExceeded(word_cap, ca.q**k, "words")
    weights, dd = mu.integer_weights()
    m = k + 2 * ca.radius * n
    counts = _image_dp(ca, k, n, weights, cap)
    denom = dd**m
    return {
        ca.decode(row): Fraction(counts.get(tuple(row), 0), denom)
        for row in all_neighbourhoods(ca.q, k).tolist()
    }


def brute_force_pushforward(ca: CellularAutomaton, mu: BernoulliMeasure, u: Word, n: int) -> Fraction:
    """Enumerate every preimage window and push it through ``n`` steps.

    Independent of the dynamic programme; only feasible for short windows.
    """
    codes = np.array(ca.encode(u))
    r = ca.radius
    m = len(codes) + 2 * r * n
    words = all_neighbourhoods(ca.q, m)
    rows = words.astype(np.int64)
    for _ in range(n):
        width = rows.shape[1] - 2 * r
        code = np.zeros((rows.shape[0], width), dtype=np.int64)
        for j in range(2 * r + 1):
            code = code * ca.q + rows[:, j : j + width]
        rows = ca.table[code].astype(np.int64)
    hit = np.all(rows == codes, axis=1)
    weights, d = mu.integer_weights()
    wvec = np.array(weights, dtype=object)
    total = sum(int(np.prod(wvec[w])) if len(w) else 1 for w in words[hit])
    return Fraction(total, d**m)


# -- preimage window scan ----------------------------------------------------------

@dataclass(frozen=True)
class WindowScan:
    found: bool
    witness: tuple[str, ...] | None = None
    offsets: tuple[int, int] | None = None


def preimage_window_scan(
    ca: CellularAutomaton,
    mu: BernoulliMeasure | None,
    u: Word,
    w: Word,
    n: int,
    cap: int = DEFAULT_COST_CAP,
) -> WindowScan:
    """Look for an ``n``-step preimage of ``u`` carrying ``w`` on both sides.

    The preimage window has length ``|u| + 2rn``; the left copy of ``w`` ends
    ``k1`` cells before the cells above ``u`` and the right copy starts ``k2``
    cells after them, for every admissible ``k1, k2 >= 0``.
    """
    if mu is not None:
        _check_measure(ca, mu)
    uc, wc = ca.encode(u), ca.encode(w)
    if not wc or not uc:
        raise PreconditionError("u and w must be non-empty")
    rn = ca.radius * n
    if rn - len(wc) < 0:
        return WindowScan(False)
    # only symbols in the support of mu may appear in the preimage
    weights = [1] * ca.q if mu is None else [int(p > 0) for p in mu.probabilities]
    budget = cap
    for k1 in range(rn - len(wc) + 1):
        for k2 in range(rn - len(wc) + 1):
            left = rn - k1 - len(wc)
            right = rn + len(uc) + k2
            fixed = {left + j: x for j, x in enumerate(wc)}
            fixed.update({right + j: x for j, x in enumerate(wc)})
            res = _preimage_dp(ca, uc, n, weights, budget, fixed, want_witness=True)
            budget -= res.spent
            if res.total:
                return WindowScan(True, ca.decode(res.witness), (k1, k2))
    return WindowScan(False)


# -- persistence reports -------------------------------------------------------------

@dataclass(frozen=True)
class SeriesPoint:
    n: int
    value: Fraction | float
    method: str  # "exact" or "montecarlo"
    ci_halfwidth: float | None = None


@dataclass(frozen=True)
class PersistenceReport:
    word: tuple[str, ...]
    horizon: int
    epsilon: float
    series: tuple[SeriesPoint, ...]
    verdict: str
    seed: int | None = None
    notes: tuple[str, ...] = field(default=())

    def values(self) -> list:
        return [p.value for p in self.series]


def classify(values: Sequence, epsilon) -> str:
    """Verdict over a series indexed by n = 0..N.

    Vanishing when the last ceil(N/4) values are below epsilon and some value
    fell to at most half of the initial one; persistent when the last
    ceil(N/4) values all exceed epsilon.
    """
    horizon = len(values) - 1
    tail_len = max(1, math.ceil(horizon / 4))
    tail = values[-tail_len:]
    halved = any(v * 2 <= values[0] for v in values[1:])
    if all(v < epsilon for v in tail) and halved:
        return VANISHING
    if all(v > epsilon for v in tail):
        return PERSISTENT
    return INCONCLUSIVE


def exact_series(ca, mu, u, horizon, cap=DEFAULT_COST_CAP) -> list[SeriesPoint]:
    """Exact values for n = 0, 1, ... until the horizon or the first refusal."""
    points = []
    for n in range(horizon + 1):
        try:
            res = pushforward_cylinder(ca, mu, u, n, cap)
        except CostCapExceeded:
            break
        points.append(SeriesPoint(n, res.value, "exact"))
    return points


def _warn_incomplete(mu):
    if not mu.complete:
        warnings.warn(
            "measure is not complete; persistence characterisations assume full support",
            stacklevel=3,
        )


def persistence_report(
    ca: CellularAutomaton,
    mu: BernoulliMeasure,
    u: Word,
    horizon: int,
    epsilon,
    cap: int = DEFAULT_COST_CAP,
    seed: int = 0,
    plan=None,
) -> PersistenceReport:
    """Horizon-bounded evidence on whether ``u`` is persistent.

    Exact values while the dynamic programme stays under ``cap``; sampled
    estimates (see :mod:`mulimit.montecarlo`) for the remaining steps.
    """
    _check_measure(ca, mu)
    _warn_incomplete(mu)
    codes = ca.encode(u)
    word = ca.decode(codes)
    points = exact_series(ca, mu, word, horizon, cap)
    used_seed = None
    if len(points) < horizon + 1:
        from .montecarlo import default_plan, sample_series

        plan = plan or default_plan(ca, horizon, len(word), seed=seed, words=[word])
        fs = sample_series(ca, mu, plan)
        used_seed = plan.seed
        est = fs.estimates[word]
        ci = fs.halfwidths[word]
        for nn in range(len(points), horizon + 1):
            points.append(SeriesPoint(nn, float(est[nn]), "montecarlo", float(ci[nn])))
    verdict = classify([p.value for p in points], epsilon)
    return PersistenceReport(word, horizon, float(epsilon), tuple(points), verdict, used_seed)


@dataclass(frozen=True)
class QuasiNilpotencyReport:
    survivors: tuple[str, ...]
    candidate: str | None
    letter_reports: dict
    pair_verdicts: dict
    horizon: int
    epsilon: float

    @property
    def verdict(self) -> str:
        if self.candidate is not None:
            return f"QUASI-NILPOTENT-CANDIDATE({self.candidate})"
        return "NO-CANDIDATE"


def quasi_nilpotency_probe(
    ca: CellularAutomaton,
    mu: BernoulliMeasure,
    horizon: int,
    epsilon,
    cap: int = 2 * 10**5,
    seed: int = 0,
    plan=None,
) -> QuasiNilpotencyReport:
    """Series for every letter and every length-2 word, classified at the horizon.

    A letter ``q`` is flagged as the candidate when it is the only letter not
    classified vanishing and every length-2 word other than ``qq`` is.  One
    sampling run (tracking all these words) backs every series beyond the
    exact range, which is bounded by the smaller default ``cap``.
    """
    from .montecarlo import default_plan, sample_series

    _check_measure(ca, mu)
    _warn_incomplete(mu)
    letters = [(a,) for a in ca.alphabet]
    pairs = [(a, b) for a in ca.alphabet for b in ca.alphabet]
    plan = plan or default_plan(ca, horizon, 2, seed=seed, words=letters + pairs)
    fs = None

    def series(word):
        nonlocal fs
        points = exact_series(ca, mu, word, horizon, cap)
        if len(points) < horizon + 1:
            if fs is None:
                fs = sample_series(ca, mu, plan)
            est, ci = fs.estimates[word], fs.halfwidths[word]
            points += [
                SeriesPoint(nn, float(est[nn]), "montecarlo", float(ci[nn]))
                for nn in range(len(points), horizon + 1)
            ]
        return points

    letter_reports = {}
    for word in letters:
        pts = series(word)
        letter_reports[word[0]] = PersistenceReport(
            word, horizon, float(epsilon), tuple(pts), classify([p.value for p in pts], epsilon), plan.seed
        )
    survivors = tuple(a for a, rep in letter_reports.items() if rep.verdict != VANISHING)
    pair_verdicts = {}
    candidate = None
    if len(survivors) == 1:
        s = survivors[0]
        for word in pairs:
            if word == (s, s):
                continue
            pts = series(word)
            pair_verdicts[word] = classify([p.value for p in pts], epsilon)
        if all(v == VANISHING for v in pair_verdicts.values()):
            candidate = s
    return QuasiNilpotencyReport(survivors, candidate, letter_reports, pair_verdicts, horizon, float(epsilon))
