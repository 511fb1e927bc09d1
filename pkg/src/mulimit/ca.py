"""One-dimensional cellular automata, finite configurations and space-time traces.

States are opaque strings at the API boundary and dense ``int32`` indices
internally; the alphabet order fixes the mapping and the layout of the rule
table, which is indexed by the mixed-radix code of the neighbourhood with the
leftmost cell most significant.  With that convention the Wolfram number of an
elementary rule is read off the table directly: ``rule(a, b, c)`` is bit
``4a + 2b + c``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    AlphabetError,
    EmptyConfigurationError,
    PreconditionError,
    RuleParseError,
)

CYCLIC = "cyclic"
WINDOW = "window"

Word = str | Sequence[str]


def all_neighbourhoods(q: int, width: int) -> np.ndarray:
    """Every length-``width`` tuple over ``range(q)`` in table order, shape (q**width, width)."""
    if width == 0:
        return np.zeros((1, 0), dtype=np.int32)
    grid = np.indices((q,) * width, dtype=np.int32)
    return grid.reshape(width, -1).T.copy()


@dataclass(frozen=True, eq=False)
class CellularAutomaton:
    alphabet: tuple[str, ...]
    radius: int
    table: np.ndarray
    name: str = ""
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alphabet = tuple(str(a) for a in self.alphabet)
        if not alphabet:
            raise AlphabetError("alphabet must contain at least one state")
        if len(set(alphabet)) != len(alphabet):
            raise AlphabetError(f"duplicate states in alphabet {alphabet}")
        if self.radius < 0:
            raise PreconditionError("radius must be non-negative")
        q = len(alphabet)
        table = np.asarray(self.table, dtype=np.int32).ravel().copy()
        if table.shape[0] != q ** (2 * self.radius + 1):
            raise PreconditionError(
                f"rule table has {table.shape[0]} entries, expected {q ** (2 * self.radius + 1)}"
            )
        if table.size and (table.min() < 0 or table.max() >= q):
            raise AlphabetError("rule table refers to a state outside the alphabet")
        table.setflags(write=False)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(alphabet)})

    @property
    def q(self) -> int:
        return len(self.alphabet)

    @property
    def span(self) -> int:
        return 2 * self.radius + 1

    def __eq__(self, other):
        if not isinstance(other, CellularAutomaton):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.radius == other.radius
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.alphabet, self.radius, self.table.tobytes()))

    # -- symbols -----------------------------------------------------------
    def index(self, symbol: str) -> int:
        try:
            return self._index[str(symbol)]
        except KeyError:
            raise AlphabetError(f"symbol {symbol!r} is not in the alphabet of {self.name or 'the automaton'}") from None

    def encode(self, word: Word) -> tuple[int, ...]:
        """Map a word to state indices.

        A plain string is split into characters when every state name is a
        single character; otherwise pass a sequence of state names.
        """
        return encode_word(self.alphabet, word, self._index)

    def decode(self, codes: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.alphabet[int(c)] for c in codes)

    def show(self, codes: Iterable[int]) -> str:
        syms = self.decode(codes)
        sep = "" if all(len(a) == 1 for a in self.alphabet) else " "
        return sep.join(syms)

    # -- local rule --------------------------------------------------------
    def code_of(self, neighbourhood: Sequence[int]) -> int:
        code = 0
        for x in neighbourhood:
            code = code * self.q + int(x)
        return code

    def local(self, *neighbourhood: str) -> str:
        """Evaluate the local rule on a neighbourhood of state names."""
        if len(neighbourhood) != self.span:
            raise PreconditionError(f"local rule takes {self.span} states, got {len(neighbourhood)}")
        return self.alphabet[self.table[self.code_of([self.index(a) for a in neighbourhood])]]

    def rule_range(self) -> frozenset[int]:
        return frozenset(int(v) for v in np.unique(self.table))

    # -- serialization -----------------------------------------------------
    def to_document(self) -> dict:
        neigh = all_neighbourhoods(self.q, self.span)
        return {
            "name": self.name,
            "alphabet": list(self.alphabet),
            "radius": self.radius,
            "rule": [
                {"in": [self.alphabet[x] for x in row], "out": self.alphabet[out]}
                for row, out in zip(neigh.tolist(), self.table.tolist())
            ],
        }

    def wolfram_number(self) -> int | None:
        """Wolfram code of an elementary rule, ``None`` for anything else."""
        if self.alphabet != ("0", "1") or self.radius != 1:
            return None
        return sum(int(v) << i for i, v in enumerate(self.table.tolist()))


def encode_word(alphabet: Sequence[str], word: Word, index: dict | None = None) -> tuple[int, ...]:
    if index is None:
        index = {a: i for i, a in enumerate(alphabet)}
    if isinstance(word, str):
        if word in index and not all(len(a) == 1 for a in alphabet):
            items: Sequence[str] = [word]
        else:
            items = list(word)
    else:
        items = [str(x) for x in word]
    try:
        return tuple(index[a] for a in items)
    except KeyError as exc:
        raise AlphabetError(f"symbol {exc.args[0]!r} is not in the alphabet {tuple(alphabet)}") from None


# -- builders ----------------------------------------------------------------

def from_function(
    alphabet: Sequence[str],
    radius: int,
    rule: Callable[..., str],
    name: str = "",
) -> CellularAutomaton:
    """Tabulate ``rule(*neighbourhood)`` (state names in, state name out)."""
    alphabet = tuple(str(a) for a in alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    neigh = all_neighbourhoods(len(alphabet), 2 * radius + 1)
    out = []
    for row in neigh.tolist():
        value = rule(*(alphabet[x] for x in row))
        if value not in index:
            raise AlphabetError(f"rule produced {value!r}, not in alphabet")
        out.append(index[value])
    return CellularAutomaton(alphabet, radius, np.array(out, dtype=np.int32), name)


def wolfram(number: int) -> CellularAutomaton:
    if not 0 <= int(number) <= 255:
        raise RuleParseError(f"Wolfram rule number must be in 0..255, got {number}")
    bits = [(int(number) >> i) & 1 for i in range(8)]
    return CellularAutomaton(("0", "1"), 1, np.array(bits, dtype=np.int32), f"wolfram:{int(number)}")


def identity_ca(alphabet: Sequence[str] = ("0", "1"), radius: int = 0) -> CellularAutomaton:
    neigh = all_neighbourhoods(len(alphabet), 2 * radius + 1)
    return CellularAutomaton(tuple(alphabet), radius, neigh[:, radius], f"identity(r={radius})")


def left_shift_ca(alphabet: Sequence[str] = ("0", "1")) -> CellularAutomaton:
    """``rule(a, b, c) = c``: every cell copies its right neighbour."""
    neigh = all_neighbourhoods(len(alphabet), 3)
    return CellularAutomaton(tuple(alphabet), 1, neigh[:, 2], "left-shift")


def spreading_state_ca(base: CellularAutomaton, s: str) -> CellularAutomaton:
    """Extend ``base`` with a state ``s`` that takes over every neighbourhood containing it."""
    s = str(s)
    if s in base.alphabet:
        raise AlphabetError(f"spreading state {s!r} already belongs to the base alphabet")
    q = base.q + 1
    neigh = all_neighbourhoods(q, base.span)
    has_s = (neigh == base.q).any(axis=1)
    base_codes = np.zeros(neigh.shape[0], dtype=np.int64)
    for j in range(base.span):
        base_codes = base_codes * base.q + np.where(has_s, 0, neigh[:, j])
    table = np.where(has_s, base.q, base.table[base_codes])
    return CellularAutomaton(base.alphabet + (s,), base.radius, table, f"{base.name or 'base'}+spreading({s})")


# -- rule documents ------------------------------------------------------------

def parse_rule(source) -> CellularAutomaton:
    """Build an automaton from ``wolfram:<n>``, an int, JSON text or a decoded document."""
    if isinstance(source, CellularAutomaton):
        return source
    if isinstance(source, int):
        return wolfram(source)
    if isinstance(source, str):
        text = source.strip()
        if text.startswith("wolfram:"):
            num = text[len("wolfram:"):]
            if not num.isdigit():
                raise RuleParseError(f"bad Wolfram number {num!r}", "wolfram shorthand")
            return wolfram(int(num))
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RuleParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
        if isinstance(doc, str):
            return parse_rule(doc)
        return _rule_from_document(doc)
    if isinstance(source, dict):
        return _rule_from_document(source)
    raise RuleParseError(f"cannot interpret {type(source).__name__} as a rule document")


def load_rule(path_or_spec: str | Path) -> CellularAutomaton:
    """Read a rule document from disk; ``wolfram:<n>`` is accepted in place of a path."""
    text = str(path_or_spec)
    if text.startswith("wolfram:"):
        return parse_rule(text)
    try:
        content = Path(path_or_spec).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuleParseError(str(exc), str(path_or_spec)) from None
    return parse_rule(content)


def _rule_from_document(doc: dict) -> CellularAutomaton:
    if not isinstance(doc, dict):
        raise RuleParseError("rule document must be a JSON object", "document")
    for key in ("alphabet", "radius", "rule"):
        if key not in doc:
            raise RuleParseError(f"missing field {key!r}", "document")
    alphabet = doc["alphabet"]
    if not isinstance(alphabet, list) or not all(isinstance(a, str) for a in alphabet):
        raise RuleParseError("alphabet must be an array of strings", "alphabet")
    if len(set(alphabet)) != len(alphabet):
        raise RuleParseError("duplicate alphabet entries", "alphabet")
    if not alphabet:
        raise RuleParseError("alphabet is empty", "alphabet")
    radius = doc["radius"]
    if not isinstance(radius, int) or isinstance(radius, bool) or radius < 0:
        raise RuleParseError("radius must be a non-negative integer", "radius")
    entries = doc["rule"]
    if not isinstance(entries, list):
        raise RuleParseError("rule must be an array", "rule")
    q, span = len(alphabet), 2 * radius + 1
    index = {a: i for i, a in enumerate(alphabet)}
    table = np.full(q**span, -1, dtype=np.int64)
    for k, entry in enumerate(entries):
        loc = f"rule[{k}]"
        if not isinstance(entry, dict) or "in" not in entry or "out" not in entry:
            raise RuleParseError("entry must have 'in' and 'out'", loc)
        neigh, out = entry["in"], entry["out"]
        if not isinstance(neigh, list) or len(neigh) != span:
            raise RuleParseError(f"'in' must list {span} states", loc)
        code = 0
        for a in neigh:
            if a not in index:
                raise RuleParseError(f"state {a!r} not in alphabet", loc)
            code = code * q + index[a]
        if out not in index:
            raise RuleParseError(f"output state {out!r} not in alphabet", loc)
        if table[code] >= 0:
            raise RuleParseError(f"duplicate entry for neighbourhood {neigh}", loc)
        table[code] = index[out]
    missing = np.flatnonzero(table < 0)
    if missing.size:
        first = all_neighbourhoods(q, span)[missing[0]]
        raise RuleParseError(
            f"{missing.size} neighbourhood(s) missing, first is {[alphabet[x] for x in first]}", "rule"
        )
    return CellularAutomaton(tuple(alphabet), radius, table.astype(np.int32), str(doc.get("name", "")))


# -- configurations ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Configuration:
    alphabet: tuple[str, ...]
    cells: np.ndarray
    topology: str = CYCLIC

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int32).ravel().copy()
        if self.topology not in (CYCLIC, WINDOW):
            raise PreconditionError(f"unknown topology {self.topology!r}")
        if cells.size and (cells.min() < 0 or cells.max() >= len(self.alphabet)):
            raise AlphabetError("configuration holds a state index outside the alphabet")
        cells.setflags(write=False)
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_word(cls, ca: CellularAutomaton, word: Word, topology: str = CYCLIC) -> "Configuration":
        return cls(ca.alphabet, np.array(ca.encode(word), dtype=np.int32), topology)

    @property
    def width(self) -> int:
        return int(self.cells.shape[0])

    def symbols(self) -> tuple[str, ...]:
        return tuple(self.alphabet[i] for i in self.cells.tolist())

    def rotate(self, k: int) -> "Configuration":
        """Shift contents left by ``k`` cells (cell ``i`` receives old cell ``i + k``)."""
        return Configuration(self.alphabet, np.roll(self.cells, -k), self.topology)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.topology == other.topology
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self):
        return hash((self.alphabet, self.topology, self.cells.tobytes()))

    def __repr__(self):
        sep = "" if all(len(a) == 1 for a in self.alphabet) else " "
        return f"Configuration({self.topology}, {sep.join(self.symbols())!r})"


def random_configuration(ca: CellularAutomaton, width: int, rng: np.random.Generator, p=None) -> Configuration:
    cells = rng.choice(ca.q, size=width, p=p).astype(np.int32)
    return Configuration(ca.alphabet, cells)


def _check(ca: CellularAutomaton, c: Configuration):
    if c.alphabet != ca.alphabet:
        raise AlphabetError("configuration alphabet differs from the automaton's alphabet")
    if c.width == 0:
        raise EmptyConfigurationError("configuration has zero width")
    if c.topology != CYCLIC:
        raise PreconditionError("global stepping requires a cyclic configuration")


def apply_global(ca: CellularAutomaton, c: Configuration) -> Configuration:
    _check(ca, c)
    out = kernels.step_rows(ca.table, ca.q, ca.radius, c.cells.reshape(1, -1))
    return Configuration(ca.alphabet, out[0], CYCLIC)


@dataclass(frozen=True, eq=False)
class SpaceTimeTrace:
    automaton: CellularAutomaton
    rows: np.ndarray  # (T+1, W); row t is A^t(c)

    @property
    def steps(self) -> int:
        return self.rows.shape[0] - 1

    def row(self, t: int) -> Configuration:
        return Configuration(self.automaton.alphabet, self.rows[t], CYCLIC)

    def __len__(self):
        return self.rows.shape[0]


def iterate(ca: CellularAutomaton, c: Configuration, n: int) -> SpaceTimeTrace:
    if n < 0:
        raise PreconditionError("step count must be non-negative")
    _check(ca, c)
    rows = kernels.run_trace(ca.table, ca.q, ca.radius, c.cells, int(n))
    rows.setflags(write=False)
    return SpaceTimeTrace(ca, rows)


def word_occurrences(c: Configuration, u: Word) -> int:
    """Number of (cyclic) positions where ``u`` occurs in ``c``."""
    codes = encode_word(c.alphabet, u)
    if not codes:
        raise EmptyConfigurationError("cannot count occurrences of the empty word")
    if c.topology == CYCLIC and len(codes) > c.width:
        raise PreconditionError(f"word of length {len(codes)} is longer than the width {c.width}")
    cells = c.cells
    w = c.width
    if c.topology == CYCLIC:
        idx = (np.arange(w)[:, None] + np.arange(len(codes))[None, :]) % w
    else:
        if len(codes) > w:
            return 0
        idx = np.arange(w - len(codes) + 1)[:, None] + np.arange(len(codes))[None, :]
    return int(np.all(cells[idx] == np.array(codes), axis=1).sum())
