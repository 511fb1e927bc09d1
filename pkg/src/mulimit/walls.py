"""Wall certification with a cartesian set abstraction.

An abstract configuration keeps, for every cell of a finite window, the set
of states the cell may hold (a bitmask over the alphabet); cells outside the
window are permanently "anything".  Stepping takes the image of the local
rule over the product of neighbouring sets, which over-approximates every
concrete orbit, so a singleton cell is a proof that the cell is determined.

Words are centred as cylinders: a word of length ``L`` occupies cells
``[-ceil(L/2), floor(L/2))``.  Every centred word contains cell ``-1``, the
anchor used for determinedness checks.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ca import CellularAutomaton, Word, all_neighbourhoods
from .errors import EmptyConfigurationError, PreconditionError

log = logging.getLogger(__name__)

CERTIFIED = "CERTIFIED"
REFUTED = "REFUTED"
UNKNOWN = "UNKNOWN"

ANCHOR = -1
MAX_HORIZON = 10**6
EXHAUSTIVE_CAP = 2**20


def centred_start(length: int) -> int:
    return -((length + 1) // 2)


@dataclass(frozen=True)
class AbstractConfiguration:
    lo: int
    cells: tuple[int, ...]  # bitmasks, one per cell of [lo, lo + len)
    q: int

    def __post_init__(self):
        if any(m == 0 for m in self.cells):
            raise PreconditionError("abstract cells must be non-empty sets")

    @property
    def hi(self) -> int:
        return self.lo + len(self.cells)

    @property
    def full(self) -> int:
        return (1 << self.q) - 1

    def at(self, i: int) -> int:
        if self.lo <= i < self.hi:
            return self.cells[i - self.lo]
        return self.full

    def is_singleton(self, i: int) -> bool:
        m = self.at(i)
        return m & (m - 1) == 0

    def value(self, i: int) -> int:
        return self.at(i).bit_length() - 1

    def represents(self, cells: Sequence[int], lo: int) -> bool:
        """Does a concrete window starting at ``lo`` lie inside this abstraction?"""
        return all((self.at(lo + j) >> int(x)) & 1 for j, x in enumerate(cells))

    def sets(self, ca: CellularAutomaton) -> list[frozenset[str]]:
        return [frozenset(ca.alphabet[b] for b in range(self.q) if m >> b & 1) for m in self.cells]

    @classmethod
    def from_word(cls, ca: CellularAutomaton, codes: Sequence[int], lo: int, margin: int = 0):
        full = (1 << ca.q) - 1
        cells = (full,) * margin + tuple(1 << x for x in codes) + (full,) * margin
        return cls(lo - margin, cells, ca.q)


class _Imager:
    """Memoised set image of the local rule."""

    def __init__(self, ca: CellularAutomaton):
        self.ca = ca
        self.full = (1 << ca.q) - 1
        self.cache: dict[tuple[int, ...], int] = {}
        self.powers = [ca.q ** (ca.span - 1 - j) for j in range(ca.span)]
        self.full_image = self._mask(np.unique(ca.table))

    @staticmethod
    def _mask(values) -> int:
        m = 0
        for v in np.asarray(values).tolist():
            m |= 1 << v
        return m

    def __call__(self, masks: tuple[int, ...]) -> int:
        if all(m == self.full for m in masks):
            return self.full_image
        hit = self.cache.get(masks)
        if hit is not None:
            return hit
        code = np.zeros(1, dtype=np.int64)
        for m, pw in zip(masks, self.powers):
            members = np.array([b for b in range(self.ca.q) if m >> b & 1], dtype=np.int64)
            code = (code[:, None] + members[None, :] * pw).ravel()
        out = self._mask(np.unique(self.ca.table[code]))
        self.cache[masks] = out
        return out


_imagers: dict[int, _Imager] = {}


def _imager(ca: CellularAutomaton) -> _Imager:
    key = id(ca)
    im = _imagers.get(key)
    if im is None or im.ca is not ca:
        im = _imagers[key] = _Imager(ca)
    return im


def abstract_step(ca: CellularAutomaton, a: AbstractConfiguration) -> AbstractConfiguration:
    if a.q != ca.q:
        raise PreconditionError("abstract configuration and automaton disagree on the alphabet size")
    im = _imager(ca)
    r = ca.radius
    cells = tuple(im(tuple(a.at(i + j) for j in range(-r, r + 1))) for i in range(a.lo, a.hi))
    return AbstractConfiguration(a.lo, cells, a.q)


# -- certificates and verdicts ---------------------------------------------------

@dataclass(frozen=True)
class WallCertificate:
    foot: tuple[str, ...]
    offset: int  # first cell of the centred foot
    n0: int
    p: int
    bricks: tuple[tuple[str, ...], ...]
    max_brick_width: int
    step_words: tuple[tuple[str, ...], ...]  # maximal centred determined word, steps 0..n0+p-1
    anchor: int = ANCHOR

    def word_at(self, n: int) -> tuple[str, ...]:
        """The wall's word at step ``n`` (maximal choice, truncated to be non-increasing)."""
        if n >= self.n0 + self.p:
            j = self.n0 + (n - self.n0) % self.p
            length = self.max_brick_width
        else:
            j = n
            length = min(len(w) for w in self.step_words[: n + 1])
        return _centred_sub(self.step_words[j], length)


def _centred_sub(word: tuple, length: int) -> tuple:
    """Centred subword of a centred word."""
    full = len(word)
    cut = centred_start(length) - centred_start(full)
    return word[cut : cut + length]


@dataclass(frozen=True)
class WallVerdict:
    foot: tuple[str, ...]
    status: str
    horizon: int
    certificate: WallCertificate | None = None
    step: int | None = None
    reason: str = ""

    def to_json(self) -> dict:
        cert = self.certificate
        return {
            "foot": list(self.foot),
            "verdict": self.status,
            "n0": cert.n0 if cert else None,
            "p": cert.p if cert else None,
            "bricks": [list(b) for b in cert.bricks] if cert else [],
            "max_brick_width": cert.max_brick_width if cert else None,
            "horizon": self.horizon,
            "step": self.step,
            "reason": self.reason,
        }


def default_horizon(q: int, foot_len: int) -> int:
    bound = 4 * (2**q - 1) ** (foot_len + 2)
    return min(bound, MAX_HORIZON)


def _centred_length(run_lo: int, run_hi: int) -> int:
    length = 0
    while True:
        nxt = length + 1
        if centred_start(nxt) < run_lo or centred_start(nxt) + nxt > run_hi:
            return length
        length = nxt


def _determined_word(a: AbstractConfiguration) -> tuple[int, ...]:
    lo = hi = ANCHOR
    while lo - 1 >= a.lo and a.is_singleton(lo - 1):
        lo -= 1
    while hi + 1 < a.hi and a.is_singleton(hi + 1):
        hi += 1
    length = _centred_length(lo, hi + 1)
    start = centred_start(length)
    return tuple(a.value(i) for i in range(start, start + length))


def _anchor_values(ca, t, completions):
    """Concrete anchor value at step ``t`` for each completion of the light cone."""
    r = ca.radius
    rows = completions.astype(np.int64)
    for _ in range(t):
        width = rows.shape[1] - 2 * r
        code = np.zeros((rows.shape[0], width), dtype=np.int64)
        for j in range(2 * r + 1):
            code = code * ca.q + rows[:, j : j + width]
        rows = ca.table[code].astype(np.int64)
    return rows[:, 0]


def _confirm_refutation(ca, codes, start, t, rng) -> bool | None:
    """True if two completions disagree at the anchor at step ``t``; False if
    the anchor is provably determined; None if undecided within budget."""
    r = ca.radius
    lo = ANCHOR - r * t
    width = 2 * r * t + 1
    fixed = {i - lo: x for i, x in enumerate(codes, start=start) if 0 <= i - lo < width}
    free = [j for j in range(width) if j not in fixed]
    samples = rng.integers(0, ca.q, size=(2048, width))
    for j, x in fixed.items():
        samples[:, j] = x
    vals = _anchor_values(ca, t, samples)
    if np.unique(vals).size > 1:
        return True
    if ca.q ** len(free) <= EXHAUSTIVE_CAP:
        rows = np.zeros((ca.q ** len(free), width), dtype=np.int64)
        rows[:, free] = all_neighbourhoods(ca.q, len(free))
        for j, x in fixed.items():
            rows[:, j] = x
        vals = _anchor_values(ca, t, rows)
        return bool(np.unique(vals).size > 1)
    return None


def check_foot(ca: CellularAutomaton, w: Word, horizon: int | None = None, seed: int = 0) -> WallVerdict:
    """Certify, refute, or give up on ``w`` being the foot of a wall.

    CERTIFIED: the abstract orbit of the centred cylinder cycles while the
    anchor stays determined.  REFUTED(t): two concrete completions of ``w``
    give different anchor values at step ``t``.  UNKNOWN: horizon exhausted
    or the abstraction lost the anchor without a concrete counterexample.
    """
    codes = ca.encode(w)
    if not codes:
        raise EmptyConfigurationError("a foot must be a non-empty word")
    foot = ca.decode(codes)
    if horizon is None:
        horizon = default_horizon(ca.q, len(codes))
    if horizon < 1:
        raise PreconditionError("horizon must be at least 1")
    start = centred_start(len(codes))
    state = AbstractConfiguration.from_word(ca, codes, start, margin=ca.radius)
    seen: dict[tuple[int, ...], int] = {}
    words: list[tuple[int, ...]] = []
    rng = np.random.default_rng(seed)
    n = 0
    while True:
        if not state.is_singleton(ANCHOR):
            confirmed = _confirm_refutation(ca, codes, start, n, rng)
            if confirmed:
                return WallVerdict(foot, REFUTED, horizon, step=n)
            why = "anchor provably determined but abstraction lost it" if confirmed is False else "refutation undecided within budget"
            return WallVerdict(foot, UNKNOWN, horizon, step=n, reason=why)
        seen[state.cells] = n
        words.append(_determined_word(state))
        if n >= horizon:
            return WallVerdict(foot, UNKNOWN, horizon, reason="horizon exhausted")
        state = abstract_step(ca, state)
        n += 1
        if state.cells in seen:
            n0 = seen[state.cells]
            p = n - n0
            width = min(len(x) for x in words)
            bricks = tuple(ca.decode(_centred_sub(words[j], width)) for j in range(n0, n0 + p))
            cert = WallCertificate(
                foot, start, n0, p, bricks, width, tuple(ca.decode(x) for x in words)
            )
            return WallVerdict(foot, CERTIFIED, horizon, certificate=cert)


def replay_certificate(
    ca: CellularAutomaton, cert: WallCertificate, trials: int = 100, steps: int | None = None, seed: int = 0
) -> int:
    """Run random concrete completions of the foot and count wall mismatches.

    Each trial fills the light cone around the centred foot at random and
    compares the centred word at every step ``n <= steps`` with
    ``cert.word_at(n)``.  Returns the number of (trial, step) mismatches.
    """
    r = ca.radius
    steps = cert.n0 + 2 * cert.p + 2 if steps is None else steps
    codes = ca.encode(cert.foot)
    lo = cert.offset - r * steps
    width = len(codes) + 2 * r * steps
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, ca.q, size=(trials, width))
    rows[:, cert.offset - lo : cert.offset - lo + len(codes)] = codes
    expected = [np.array(ca.encode(cert.word_at(n))) for n in range(steps + 1)]
    mismatches = 0
    for n in range(steps + 1):
        want = expected[n]
        begin = centred_start(len(want)) - (lo + r * n)
        got = rows[:, begin : begin + len(want)]
        mismatches += int((got != want).any(axis=1).sum())
        if n < steps:
            w = rows.shape[1] - 2 * r
            code = np.zeros((trials, w), dtype=np.int64)
            for j in range(2 * r + 1):
                code = code * ca.q + rows[:, j : j + w]
            rows = ca.table[code].astype(np.int64)
    return mismatches


# -- enumeration ----------------------------------------------------------------

@dataclass
class BrickSet:
    words: dict[tuple[str, ...], tuple[str, ...]]  # brick -> certifying foot
    verdicts: list[WallVerdict] = field(default_factory=list)

    def __contains__(self, word) -> bool:
        return tuple(word) in self.words

    def __len__(self):
        return len(self.words)


def _feet(ca: CellularAutomaton, max_len: int):
    for length in range(1, max_len + 1):
        for combo in itertools.product(ca.alphabet, repeat=length):
            yield combo


def bricks_up_to(
    ca: CellularAutomaton, max_foot_len: int, max_brick_len: int, horizon: int | None = None
) -> BrickSet:
    """Subwords (up to ``max_brick_len``) of certified bricks over all short feet.

    For a non-sensitive automaton and a complete Bernoulli measure each of
    these words is persistent, so the set is a sound lower approximation of
    the persistent language.
    """
    if max_foot_len < 1 or max_brick_len < 1:
        raise PreconditionError("caps must be positive")
    out = BrickSet({})
    for foot in _feet(ca, max_foot_len):
        v = check_foot(ca, foot, horizon)
        out.verdicts.append(v)
        if v.status != CERTIFIED:
            continue
        for brick in v.certificate.bricks:
            for i in range(len(brick)):
                for j in range(i + 1, min(len(brick), i + max_brick_len) + 1):
                    out.words.setdefault(brick[i:j], foot)
    return out


NON_SENSITIVE = "NON-SENSITIVE"
NO_WALL = "NO-WALL-FOUND-AT-CAPS"


@dataclass(frozen=True)
class SensitivityVerdict:
    status: str
    witness: tuple[str, ...] | None = None
    certificate: WallCertificate | None = None
    verdicts: tuple[WallVerdict, ...] = ()


def sensitivity_probe(ca: CellularAutomaton, max_foot_len: int, horizon: int | None = None) -> SensitivityVerdict:
    """Search for a brick of width at least the radius; sensitivity itself is never claimed.

    Radius-0 automata are non-sensitive by convention (the required width is 0).
    """
    if max_foot_len < 1:
        raise PreconditionError("caps must be positive")
    seen = []
    for foot in _feet(ca, max_foot_len):
        v = check_foot(ca, foot, horizon)
        seen.append(v)
        if v.status == CERTIFIED and v.certificate.max_brick_width >= ca.radius:
            return SensitivityVerdict(NON_SENSITIVE, foot, v.certificate, tuple(seen))
    return SensitivityVerdict(NO_WALL, verdicts=tuple(seen))


@dataclass(frozen=True)
class WallExtension:
    verdict: WallVerdict
    required_width: int

    @property
    def bound_met(self) -> bool | None:
        """Brick width reaches ``|u|``; None unless the composite foot was certified."""
        if self.verdict.status != CERTIFIED:
            return None
        return self.verdict.certificate.max_brick_width >= self.required_width


def extend_wall_foot(
    ca: CellularAutomaton, w: Word, u: Word, horizon: int | None = None
) -> WallExtension:
    """Check the composite foot ``w u w`` built from a certified foot ``w``.

    ``w`` must itself be certified with a brick at least as wide as the
    radius; the composite is then expected to carry bricks of width ``|u|``.
    """
    wc, uc = ca.encode(w), ca.encode(u)
    base = check_foot(ca, ca.decode(wc), horizon)
    if base.status != CERTIFIED or base.certificate.max_brick_width < ca.radius:
        raise PreconditionError(
            f"foot {ca.show(wc)!r} is not certified with brick width >= {ca.radius} ({base.status})"
        )
    verdict = check_foot(ca, ca.decode(wc + uc + wc), horizon)
    ext = WallExtension(verdict, len(uc))
    if ext.bound_met is False:
        log.warning("composite foot certified with width %d < %d", verdict.certificate.max_brick_width, len(uc))
    return ext
