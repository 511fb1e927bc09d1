"""Radius-1 automata that run a Turing machine inside ``#``-delimited segments.

A compiled state is either the delimiter ``#`` or a triple
``(head, symbol | signal)`` written ``"(q0,B|L)"``; the memory variant adds a
read-only tape symbol, ``"(q0,B|L|1)"``.  ``head`` is a machine state or ``-``.

Signals move one cell per step.  Left-movers are ``L``, ``F``, ``C_L`` and
``D_L``; right-movers are ``R``, ``D``, ``C_R`` and ``D_R``.  A cell holds at
most one signal: when several compete for a cell the one with the highest
priority wins, and two signals moving towards each other never cross, the
weaker being destroyed.  Stationary conversions (``L`` to ``D`` and ``F`` or
``C_L`` to ``R`` on the leftmost cell of a segment) happen in place.

Reset convention: a cell that holds ``R`` at time ``t`` is reset at ``t + 1``
and the ``R`` moves on.  The leftmost cell of a segment is reset to
``(q0, B)``; any other cell to a blank tape cell that can receive the head
from its (already reset) left neighbour.  While a cell holds ``R`` its stale
contents are invisible to its left neighbour.

Head conflicts: a head arriving from the left beats one arriving from the
right, a head that does not move (the final state) blocks arrivals, and a
head moving into ``#`` or past the left end of a segment is deleted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ca import CellularAutomaton, Configuration
from .errors import AlphabetError, InputError
from .tm import BLANK, SIGMA, TuringMachine

WALL = "#"
BASIC, MEMORY, ERASABLE = "basic", "memory", "erasable"
VARIANTS = (BASIC, MEMORY, ERASABLE)

BASIC_SIGNALS = ("-", "L", "F", "R", "D")
ERASABLE_SIGNALS = ("-", "L", "R", "D", "DL", "DR", "CL", "CR")

# collision priorities; higher wins
BASIC_PRIORITY = {"-": 0, "L": 1, "F": 2, "R": 3, "D": 4}
ERASABLE_PRIORITY = {"-": 0, "L": 1, "R": 2, "CR": 3, "CL": 4, "D": 5, "DR": 6, "DL": 7}

LEFT_MOVERS = frozenset({"L", "F", "CL", "DL"})
RIGHT_MOVERS = frozenset({"R", "D", "CR", "DR"})


def signals_for(variant: str) -> tuple[str, ...]:
    if variant not in VARIANTS:
        raise InputError(f"unknown construction variant {variant!r}; expected one of {VARIANTS}")
    return ERASABLE_SIGNALS if variant == ERASABLE else BASIC_SIGNALS


def priority_for(variant: str) -> dict:
    return ERASABLE_PRIORITY if variant == ERASABLE else BASIC_PRIORITY


def state_name(head: str, symbol: str, signal: str = "-", mem: str | None = None) -> str:
    if mem is None:
        return f"({head},{symbol}|{signal})"
    return f"({head},{symbol}|{signal}|{mem})"


def parse_state_name(name: str):
    """``None`` for ``#``, otherwise ``(head, symbol, signal, mem)`` with ``mem`` possibly ``None``."""
    if name == WALL:
        return None
    if not (name.startswith("(") and name.endswith(")")):
        raise AlphabetError(f"not a compiled state name: {name!r}")
    parts = name[1:-1].split("|")
    sim = parts[0].split(",")
    if len(sim) != 2 or len(parts) not in (2, 3):
        raise AlphabetError(f"not a compiled state name: {name!r}")
    return sim[0], sim[1], parts[1], parts[2] if len(parts) == 3 else None


def compiled_alphabet(machine: TuringMachine, variant: str) -> tuple[str, ...]:
    heads = ("-",) + machine.states
    names = [WALL]
    for h in heads:
        for a in SIGMA:
            for s in signals_for(variant):
                if variant == MEMORY:
                    names.extend(state_name(h, a, s, m) for m in SIGMA)
                else:
                    names.append(state_name(h, a, s))
    return tuple(names)


class _LocalRule:
    """The local rule of one construction on decoded cells.

    Cells are ``None`` for ``#`` or tuples ``(head, symbol, signal, mem)``.
    """

    def __init__(self, machine: TuringMachine, variant: str):
        self.m = machine
        self.variant = variant
        self.prio = priority_for(variant)
        self.final = machine.final

    def _move(self, head, symbol):
        if head == "-" or head == self.final:
            return None
        return self.m.transitions[(head, symbol)]

    def sim_step(self, left, centre, right):
        """One machine step on a cell; neighbours are ``(head, symbol)`` or ``None``.

        Returns the new ``(head, symbol)`` and whether a head entered the
        final state here during this step.
        """
        head, symbol = centre
        own = self._move(head, symbol)
        if own is not None:
            symbol = own[1]
        elif head != "-":
            return (head, symbol), False  # halted head stays and blocks arrivals
        arrived = None
        if left is not None:
            mv = self._move(*left)
            if mv is not None and mv[2] == "R":
                arrived = mv[0]
        if arrived is None and right is not None:
            mv = self._move(*right)
            if mv is not None and mv[2] == "L":
                arrived = mv[0]
        if arrived is None:
            return ("-", symbol), False
        return (arrived, symbol), arrived == self.final

    def _arrivals(self, l, c, r, cands):
        s = c[2]
        prio = self.prio
        if l is not None:
            y = l[2]
            if self.variant == ERASABLE and y == "D" and l[0] == self.final:
                y = "DR"
            if y in RIGHT_MOVERS and not (s in LEFT_MOVERS and prio[s] > prio[y]):
                cands.append(y)
        if r is not None:
            x = r[2]
            if self.variant == ERASABLE and x == "D" and r[0] == self.final:
                x = "DL"
            if x in LEFT_MOVERS and not (s in RIGHT_MOVERS and prio[s] > prio[x]):
                cands.append(x)

    def _new_sim(self, l, c, r):
        head, symbol, signal, mem = c
        fill = BLANK if mem is None else mem
        if signal == "R":
            if l is None:
                return (self.m.initial, fill), False
            return self.sim_step(l[:2], ("-", fill), None)
        left = None if l is None else l[:2]
        right = None if (r is None or r[2] == "R") else r[:2]
        return self.sim_step(left, c[:2], right)

    def __call__(self, l, c, r):
        if self.variant == ERASABLE:
            return self._erasable(l, c, r)
        return self._basic(l, c, r)

    def _basic(self, l, c, r):
        if c is None:
            return None
        signal = c[2]
        if signal == "D":
            return None
        cands = []
        self._arrivals(l, c, r, cands)
        if l is None and signal == "L":
            cands.append("D")
        if l is None and signal == "F":
            cands.append("R")
        if r is None:
            cands.append("L")
        sim, halted_here = self._new_sim(l, c, r)
        if halted_here:
            cands.append("F")
        new_signal = max(cands, key=self.prio.__getitem__, default="-")
        return (sim[0], sim[1], new_signal, c[3])

    def _erasable(self, l, c, r):
        if c is None:
            if l is not None and l[2] == "D" and l[0] != self.final:
                return ("-", BLANK, "CR", None)
            return None
        head, _, signal, _ = c
        if signal == "DR" and r is not None and (r[2] == "DL" or (r[2] == "D" and r[0] == self.final)):
            # head-on destroyers: the stronger DL takes the cell for one step
            return (head, c[1], "DL", None)
        if signal in ("DL", "DR") or (signal == "D" and head == self.final):
            return None
        cands = []
        self._arrivals(l, c, r, cands)
        if l is None and signal == "L":
            cands.append("D")
        if l is None and signal == "CL":
            cands.append("R")
        if r is None:
            cands.append("L")
            if signal == "D":
                cands.append("CL")  # the D is erasing the # on the right
        sim, _ = self._new_sim(l, c, r)
        new_signal = max(cands, key=self.prio.__getitem__, default="-")
        return (sim[0], sim[1], new_signal, None)


@dataclass(frozen=True, eq=False)
class CompiledAutomaton(CellularAutomaton):
    """A compiled construction; behaves as a plain automaton with decoded state fields."""

    variant: str = BASIC
    machine: TuringMachine | None = None

    def __post_init__(self):
        super().__post_init__()
        decoded = [parse_state_name(a) for a in self.alphabet]
        if decoded[0] is not None:
            raise AlphabetError("compiled alphabets start with '#'")
        object.__setattr__(self, "decoded", tuple(decoded))
        object.__setattr__(self, "wall", self.alphabet.index(WALL))
        sig = [d[2] if d else WALL for d in decoded]
        object.__setattr__(self, "signal_names", tuple(sig))
        object.__setattr__(self, "heads", tuple(d[0] if d else None for d in decoded))

    @property
    def final(self) -> str | None:
        return None if self.machine is None else self.machine.final

    def state(self, head: str = "-", symbol: str = BLANK, signal: str = "-", mem: str | None = None) -> int:
        if self.variant == MEMORY and mem is None:
            mem = BLANK
        return self.index(state_name(head, symbol, signal, mem if self.variant == MEMORY else None))

    def signal_mask(self, signal: str) -> np.ndarray:
        return np.array([s == signal for s in self.signal_names])

    def head_mask(self, head: str) -> np.ndarray:
        return np.array([h == head for h in self.heads])

    def clean_segment(self, length: int, memory: str | None = None) -> list[int]:
        """Head in the initial state on the first cell, blank tape, no signals."""
        if length < 1:
            raise InputError("segment length must be positive")
        q0 = self.machine.initial
        if self.variant == MEMORY:
            mem = (memory or "").ljust(length, BLANK)
            if len(mem) != length:
                raise InputError("memory word longer than the segment")
            return [self.state(q0 if i == 0 else "-", mem[i], "-", mem[i]) for i in range(length)]
        return [self.state(q0 if i == 0 else "-") for i in range(length)]

    def configuration(self, cells) -> Configuration:
        return Configuration(self.alphabet, np.asarray(cells, dtype=np.int32))

    def to_document(self) -> dict:
        doc = super().to_document()
        doc["construction"] = self.variant
        if self.machine is not None:
            doc["machine"] = self.machine.to_document()
        return doc


def _tabulate(machine: TuringMachine, variant: str, alphabet: tuple[str, ...]) -> np.ndarray:
    rule = _LocalRule(machine, variant)
    decoded = [parse_state_name(a) for a in alphabet]
    q = len(alphabet)
    if variant == MEMORY:
        # the neighbours' memories never influence a cell: tabulate on memory-free classes
        keys = {}
        cls = np.empty(q, dtype=np.int64)
        reps = []
        for i, d in enumerate(decoded):
            k = None if d is None else d[:3]
            if k not in keys:
                keys[k] = len(reps)
                reps.append(None if d is None else d[:3] + (None,))
            cls[i] = keys[k]
    else:
        cls = np.arange(q)
        reps = decoded
    index = {d: i for i, d in enumerate(decoded)}
    small = np.empty((len(reps), q, len(reps)), dtype=np.int32)
    for ci, c in enumerate(decoded):
        for li, l in enumerate(reps):
            for ri, r in enumerate(reps):
                small[li, ci, ri] = index[rule(l, c, r)]
    table = small[cls[:, None, None], np.arange(q)[None, :, None], cls[None, None, :]]
    return table.reshape(-1)


def compile_tm(machine: TuringMachine, variant: str = BASIC) -> CompiledAutomaton:
    if not isinstance(machine, TuringMachine):
        raise InputError("compile_tm expects a TuringMachine")
    alphabet = compiled_alphabet(machine, variant)
    table = _tabulate(machine, variant, alphabet)
    name = f"{variant}:{machine.name}" if machine.name else variant
    return CompiledAutomaton(alphabet, 1, table, name, variant=variant, machine=machine)


def compile_tm_basic(machine: TuringMachine) -> CompiledAutomaton:
    return compile_tm(machine, BASIC)


def compile_tm_memory(machine: TuringMachine) -> CompiledAutomaton:
    return compile_tm(machine, MEMORY)


def compile_tm_erasable(machine: TuringMachine) -> CompiledAutomaton:
    return compile_tm(machine, ERASABLE)


def as_compiled(ca: CellularAutomaton) -> CompiledAutomaton:
    """Recover the construction view of an automaton loaded from a rule document."""
    if isinstance(ca, CompiledAutomaton):
        return ca
    try:
        decoded = [parse_state_name(a) for a in ca.alphabet]
    except AlphabetError:
        raise InputError("automaton is not a compiled construction (state names do not parse)") from None
    if not decoded or decoded[0] is not None or ca.radius != 1:
        raise InputError("automaton is not a compiled construction")
    signals = {d[2] for d in decoded if d}
    if "CL" in signals:
        variant = ERASABLE
    elif any(d[3] is not None for d in decoded if d):
        variant = MEMORY
    else:
        variant = BASIC
    return CompiledAutomaton(ca.alphabet, 1, ca.table, ca.name, variant=variant, machine=None)


def as_compiled_document(doc: dict) -> CompiledAutomaton:
    """Like :func:`as_compiled` but keeps the embedded machine when the document has one."""
    from .ca import parse_rule

    ca = as_compiled(parse_rule(doc))
    if isinstance(doc, dict) and "machine" in doc:
        machine = TuringMachine.from_document(doc["machine"])
        return CompiledAutomaton(ca.alphabet, 1, ca.table, ca.name, variant=ca.variant, machine=machine)
    return ca
