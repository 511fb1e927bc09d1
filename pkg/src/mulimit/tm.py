"""Turing machines over {0, 1, B} on a semi-infinite tape."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, RuleParseError

SIGMA = ("0", "1", "B")
BLANK = "B"
MOVES = ("L", "R")


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    initial: str
    final: str
    transitions: dict  # (state, read) -> (next, write, move)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", dict(self.transitions))
        problems = []
        if len(set(self.states)) != len(self.states):
            problems.append("duplicate state names")
        for s in self.states:
            if s in ("-", "#") or any(ch in s for ch in "(),|"):
                problems.append(f"state name {s!r} clashes with the compiled-state syntax")
        if self.initial not in self.states:
            problems.append(f"initial state {self.initial!r} not declared")
        if self.final not in self.states:
            problems.append(f"final state {self.final!r} not declared")
        for (state, read), (nxt, write, move) in self.transitions.items():
            if state == self.final:
                problems.append(f"final state has an outgoing transition on {read!r}")
            if state not in self.states or nxt not in self.states:
                problems.append(f"transition ({state}, {read}) uses an undeclared state")
            if read not in SIGMA or write not in SIGMA:
                problems.append(f"transition ({state}, {read}) uses a symbol outside {SIGMA}")
            if move not in MOVES:
                problems.append(f"transition ({state}, {read}) has move {move!r}")
        missing = [(s, a) for s in self.states if s != self.final for a in SIGMA if (s, a) not in self.transitions]
        if missing:
            problems.append("missing transitions: " + ", ".join(f"({s},{a})" for s, a in missing))
        if problems:
            raise InputError("invalid Turing machine: " + "; ".join(problems))

    def step(self, state: str, read: str):
        return self.transitions[(state, read)]

    def run(self, tape="", max_steps: int = 10_000, max_cells: int | None = None) -> "TMRun":
        """Run from the initial state with the head on cell 0.

        Moving left from cell 0 or right past ``max_cells`` loses the head,
        as in the compiled automata.
        """
        cells = list(tape) or [BLANK]
        state, pos, used = self.initial, 0, 1
        for t in range(max_steps + 1):
            if state == self.final:
                return TMRun(True, t, used, "".join(cells), pos)
            if t == max_steps:
                break
            while pos >= len(cells):
                cells.append(BLANK)
            nxt, write, move = self.transitions[(state, cells[pos])]
            cells[pos] = write
            pos += 1 if move == "R" else -1
            state = nxt
            if pos < 0 or (max_cells is not None and pos >= max_cells):
                return TMRun(False, t + 1, used, "".join(cells), None, lost=True)
            used = max(used, pos + 1)
        return TMRun(False, max_steps, used, "".join(cells), pos)

    def halting_time(self, max_steps: int = 10_000) -> int | None:
        res = self.run("", max_steps)
        return res.steps if res.halted else None

    # -- documents ---------------------------------------------------------
    def to_document(self) -> dict:
        return {
            "name": self.name,
            "states": list(self.states),
            "initial": self.initial,
            "final": self.final,
            "transitions": [
                {"state": s, "read": a, "write": w, "move": mv, "next": n}
                for (s, a), (n, w, mv) in sorted(self.transitions.items())
            ],
        }

    @classmethod
    def from_document(cls, doc) -> "TuringMachine":
        if not isinstance(doc, dict):
            raise RuleParseError("machine document must be a JSON object", "document")
        for key in ("states", "initial", "final", "transitions"):
            if key not in doc:
                raise RuleParseError(f"missing field {key!r}", "document")
        trans = {}
        for k, t in enumerate(doc["transitions"]):
            try:
                key = (t["state"], t["read"])
                if key in trans:
                    raise RuleParseError(f"duplicate transition for {key}", f"transitions[{k}]")
                trans[key] = (t["next"], t["write"], t["move"])
            except (KeyError, TypeError):
                raise RuleParseError("transition needs state, read, write, move, next", f"transitions[{k}]") from None
        return cls(tuple(doc["states"]), doc["initial"], doc["final"], trans, str(doc.get("name", "")))


@dataclass(frozen=True)
class TMRun:
    halted: bool
    steps: int
    cells_used: int
    tape: str
    head: int | None
    lost: bool = False


def load_machine(path) -> TuringMachine:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return TuringMachine.from_document(doc)


# -- a few machines used in tests and examples -----------------------------------

def looping_machine() -> TuringMachine:
    """One working state sweeping right forever; never halts."""
    trans = {("q0", a): ("q0", a, "R") for a in SIGMA}
    return TuringMachine(("q0", "qf"), "q0", "qf", trans, "loop-right")


def counting_machine(t: int) -> TuringMachine:
    """Moves right ``t`` times and halts: halting time exactly ``t`` on any input."""
    if t < 1:
        raise InputError("halting time must be at least 1")
    states = tuple(f"q{i}" for i in range(t)) + ("qf",)
    trans = {}
    for i in range(t):
        nxt = f"q{i + 1}" if i + 1 < t else "qf"
        for a in SIGMA:
            trans[(f"q{i}", a)] = (nxt, a, "R")
    return TuringMachine(states, "q0", "qf", trans, f"count-{t}")


def immediate_halt_machine() -> TuringMachine:
    return counting_machine(1)


def bouncing_machine() -> TuringMachine:
    """Writes 1, steps right, comes back and halts: halting time 3, head ends on cell 1."""
    trans = {}
    for a in SIGMA:
        trans[("q0", a)] = ("q1", "1", "R")
        trans[("q1", a)] = ("q2", a, "R")
        trans[("q2", a)] = ("qf", a, "L")
    return TuringMachine(("q0", "q1", "q2", "qf"), "q0", "qf", trans, "bounce")


def first_symbol_machine() -> TuringMachine:
    """Halts at once when cell 0 holds 1; otherwise sweeps right forever."""
    trans = {("q0", "1"): ("qf", "1", "R")}
    for a in ("0", "B"):
        trans[("q0", a)] = ("q1", a, "R")
    for a in SIGMA:
        trans[("q1", a)] = ("q1", a, "R")
    return TuringMachine(("q0", "q1", "qf"), "q0", "qf", trans, "first-is-1")
