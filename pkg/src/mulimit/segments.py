"""Segment lifecycles in compiled constructions.

A segment is a maximal run of non-``#`` cells.  In the basic and memory
constructions ``#`` never changes, so each segment is simulated on its own
(cyclically closed by a single ``#``) and its states are hashed to detect
cycles.  In the erasable construction segments interact through invasions and
the whole configuration is simulated instead; each segment then owns its
original cells together with the ``#`` run that follows them.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ca import Configuration
from .compiler import BASIC, ERASABLE, CompiledAutomaton, as_compiled
from .errors import InputError, PreconditionError, Refusal

log = logging.getLogger(__name__)

DIED, CYCLING, SURVIVED, INVADED = "DIED", "CYCLING", "SURVIVED-TO-HORIZON", "INVADED"

# signal -> (event name, direction it travels: +1 right, -1 left)
_BIRTHS = {
    "F": ("F-emitted", -1),
    "R": ("R-born", +1),
    "D": ("D-born", +1),
    "DL": ("DL-born", -1),
    "DR": ("DR-born", +1),
    "CL": ("CL-born", -1),
    "CR": ("CR-born", +1),
}

TM_PREHORIZON = 10_000


@dataclass
class SegmentReport:
    segment_id: int
    start: int
    length: int
    outcome: str
    outcome_step: int | None = None
    n0: int | None = None
    period: int | None = None
    events: list = field(default_factory=list)  # (t, event) pairs

    @property
    def label(self) -> str:
        if self.outcome == CYCLING:
            return f"CYCLING({self.n0},{self.period})"
        if self.outcome in (DIED, INVADED):
            return f"{self.outcome}({self.outcome_step})"
        return self.outcome

    def to_json(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "start": self.start,
            "length": self.length,
            "outcome": self.label,
            "events": [{"t": t, "event": e} for t, e in self.events],
        }


def find_segments(cells: np.ndarray, wall: int) -> list[tuple[int, int]]:
    """Maximal non-wall runs as ``(start, length)``; runs may wrap around."""
    w = cells.shape[0]
    is_wall = cells == wall
    if is_wall.all():
        return []
    if not is_wall.any():
        return [(0, w)]
    first_wall = int(np.flatnonzero(is_wall)[0])
    runs, start, length = [], None, 0
    for k in range(1, w + 1):
        i = (first_wall + k) % w
        if is_wall[i]:
            if start is not None:
                runs.append((start, length))
            start, length = None, 0
        else:
            if start is None:
                start = i
            length += 1
    return sorted(runs)


class _EventScanner:
    """Compares consecutive rows of a trace and names what happened."""

    def __init__(self, ca: CompiledAutomaton):
        self.ca = ca
        names = sorted(set(ca.signal_names))
        self.names = names
        self.code = np.array([names.index(s) for s in ca.signal_names])
        self.wall = ca.wall

    def scan(self, prev: np.ndarray, cur: np.ndarray, positions):
        """Events at step ``t`` given rows ``t-1`` and ``t``, for cells in ``positions``."""
        out = []
        w = cur.shape[0]
        sp, sc = self.code[prev], self.code[cur]
        for i in positions:
            if prev[i] == self.wall and cur[i] != self.wall:
                out.append(f"#-erased-at {i}")
            elif prev[i] != self.wall and cur[i] == self.wall:
                out.append(f"cell-turned-# {i}")
            name = self.names[sc[i]]
            if name in _BIRTHS:
                ev, direction = _BIRTHS[name]
                src = (i - direction) % w
                if self.names[sp[src]] != name:
                    out.append(f"{ev} {i}")
        return out


def _check_input(ca, c0: Configuration, horizon: int) -> CompiledAutomaton:
    ca = as_compiled(ca)
    if horizon is None or horizon <= 0:
        raise PreconditionError("segment analysis needs a positive horizon")
    if c0.alphabet != ca.alphabet:
        raise InputError("configuration alphabet differs from the automaton's alphabet")
    if c0.width == 0:
        raise InputError("configuration has zero width")
    return ca


def analyze_segments(ca, c0: Configuration, horizon: int) -> list[SegmentReport]:
    ca = _check_input(ca, c0, horizon)
    cells = np.asarray(c0.cells, dtype=np.int32)
    segs = find_segments(cells, ca.wall)
    if not segs:
        return [SegmentReport(0, 0, 0, DIED, 0)]
    if len(segs) == 1 and segs[0][1] == cells.shape[0]:
        log.warning("configuration holds no '#': treating it as one wrap-around segment")
    if ca.variant == ERASABLE:
        return _analyze_global(ca, cells, segs, horizon)
    return [_analyze_isolated(ca, cells, k, start, length, horizon) for k, (start, length) in enumerate(segs)]


def _analyze_isolated(ca, cells, seg_id, start, length, horizon) -> SegmentReport:
    w = cells.shape[0]
    idx = (start + np.arange(length)) % w
    if length == w:
        row = cells.copy()
        positions = list(range(w))
    else:
        row = np.concatenate([[ca.wall], cells[idx]]).astype(np.int32)
        positions = list(range(1, length + 1))
    scanner = _EventScanner(ca)
    report = SegmentReport(seg_id, start, length, SURVIVED)
    seen = {row.tobytes(): 0}
    rows = row.reshape(1, -1)
    for t in range(1, horizon + 1):
        nxt = kernels.step_rows(ca.table, ca.q, 1, rows)
        prev, cur = rows[0], nxt[0]
        glob = {p: int(idx[p - 1]) if length != w else p for p in positions}
        for ev in scanner.scan(prev, cur, positions):
            name, pos = ev.rsplit(" ", 1)
            report.events.append((t, f"{name}@{glob[int(pos)]}"))
        rows = nxt
        body = cur[positions]
        if (body == ca.wall).all():
            report.outcome, report.outcome_step = DIED, t
            return report
        key = cur.tobytes()
        if key in seen:
            n0 = seen[key]
            report.outcome, report.n0, report.period = CYCLING, n0, t - n0
            report.events.append((t, f"cycle-detected({t - n0})"))
            return report
        seen[key] = t
    return report


def _analyze_global(ca, cells, segs, horizon) -> list[SegmentReport]:
    w = cells.shape[0]
    # ownership: segment k owns its cells and the wall run up to the next segment
    owner = np.empty(w, dtype=np.int64)
    for k, (start, _) in enumerate(segs):
        end = segs[(k + 1) % len(segs)][0]
        span = (end - start) % w or w
        owner[(start + np.arange(span)) % w] = k
    rows = kernels.run_trace(ca.table, ca.q, 1, cells, int(horizon))
    scanner = _EventScanner(ca)
    reports = [SegmentReport(k, s, n, SURVIVED) for k, (s, n) in enumerate(segs)]
    cycle = _first_repeat(rows)
    for t in range(1, horizon + 1):
        for ev in scanner.scan(rows[t - 1], rows[t], range(w)):
            name, pos = ev.rsplit(" ", 1)
            reports[owner[int(pos)]].events.append((t, f"{name}@{pos}"))
    for rep, (start, length) in zip(reports, segs):
        idx = (start + np.arange(length)) % w
        dead = (rows[:, idx] == ca.wall).all(axis=1)
        alive_steps = np.flatnonzero(~dead)
        left_wall = (start - 1) % w
        invaded = np.flatnonzero(rows[:, left_wall] != ca.wall)
        if alive_steps.size and alive_steps[-1] < horizon:
            rep.outcome, rep.outcome_step = DIED, int(alive_steps[-1]) + 1
        elif length < w and invaded.size:
            rep.outcome, rep.outcome_step = INVADED, int(invaded[0])
        elif cycle is not None:
            rep.outcome, rep.n0, rep.period = CYCLING, cycle[0], cycle[1]
            rep.events.append((cycle[0] + cycle[1], f"cycle-detected({cycle[1]})"))
    return reports


def _first_repeat(rows: np.ndarray):
    seen = {}
    for t in range(rows.shape[0]):
        key = rows[t].tobytes()
        if key in seen:
            return seen[key], t - seen[key]
        seen[key] = t
    return None


def write_events_csv(reports, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "segment_id", "event"])
        for rep in reports:
            for t, ev in rep.events:
                out.writerow([t, rep.segment_id, ev])


def reports_to_json(reports) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)


# -- the sigma probe --------------------------------------------------------------

@dataclass(frozen=True)
class SigmaProbeResult:
    d1: int
    d2: int
    halting_time: int
    trials: int
    horizon: int
    seed: int
    death_steps: tuple  # per trial, None when the target survived the horizon
    interior: str

    @property
    def all_died(self) -> bool:
        return all(d is not None for d in self.death_steps)

    @property
    def lower_bound(self) -> int | None:
        """Largest observed death step: a lower bound on sigma(d1, d2), never sigma itself."""
        seen = [d for d in self.death_steps if d is not None]
        return max(seen) if seen else None

    def to_json(self) -> dict:
        return {
            "d1": self.d1,
            "d2": self.d2,
            "halting_time": self.halting_time,
            "trials": self.trials,
            "horizon": self.horizon,
            "seed": self.seed,
            "interior": self.interior,
            "all_died": self.all_died,
            "sigma_lower_bound": self.lower_bound,
            "death_steps": list(self.death_steps),
        }


def non_invasive_segment(ca: CompiledAutomaton, length: int) -> list[int]:
    """No simulation running and a single R on the first cell."""
    return [ca.state("-", "B", "R" if i == 0 else "-") for i in range(length)]


def sigma_layout(ca: CompiledAutomaton, d1: int, d2: int, t: int, target, middle) -> tuple[list[int], slice]:
    """``# NI #^(d1) target # middle # #``: returns the cells and the target's slice.

    ``d1`` counts from the non-invasive segment's right ``#`` to the target's
    left ``#``, ``d2`` from the target's right ``#`` to the next ``#``.
    """
    wall = ca.wall
    cells = [wall] + non_invasive_segment(ca, max(2 * t, 1)) + [wall] * d1
    begin = len(cells)
    cells += list(target)
    end = len(cells)
    cells += [wall] + list(middle) + [wall] * 2
    return cells, slice(begin, end)


def sigma_probe(
    ca,
    d1: int,
    d2: int,
    trials: int = 32,
    seed: int = 0,
    length: int | None = None,
    interior: str = "random",
    horizon: int | None = None,
) -> SigmaProbeResult:
    """Death times of a target segment squeezed between a non-invasive segment and a ``#``.

    ``interior="random"`` draws the target and the cells between its right
    border and the ``#`` at distance ``d2`` uniformly from the non-``#``
    states; ``"trivial"`` uses blank cells without signals.
    """
    ca = as_compiled(ca)
    if ca.variant != ERASABLE:
        raise InputError("sigma_probe needs the erasable construction")
    if ca.machine is None:
        raise InputError("sigma_probe needs the compiled machine (compile it or load a document with one)")
    t = ca.machine.halting_time(TM_PREHORIZON)
    if t is None:
        raise Refusal(f"machine does not halt on the empty input within {TM_PREHORIZON} steps")
    if d1 < 1:
        raise PreconditionError("d1 must be at least 1")
    if d2 < 2 * t:
        raise PreconditionError(f"d2 must be at least 2t = {2 * t}")
    if interior not in ("random", "trivial"):
        raise InputError("interior must be 'random' or 'trivial'")
    length = length if length is not None else max(2 * t, 1)
    rng = np.random.Generator(np.random.Philox(seed))
    blank = ca.state()
    rows = []
    target_slice = None
    for _ in range(trials):
        if interior == "random":
            target = rng.integers(1, ca.q, size=length)
            middle = rng.integers(1, ca.q, size=d2 - 1)
        else:
            target, middle = [blank] * length, [blank] * (d2 - 1)
        cells, target_slice = sigma_layout(ca, d1, d2, t, target, middle)
        rows.append(cells)
    batch = np.array(rows, dtype=np.int32)
    width = batch.shape[1]
    if horizon is None:
        horizon = 40 * width * max(t, 1)
    alive_last = np.full(trials, -1, dtype=np.int64)
    for step in range(horizon + 1):
        body = batch[:, target_slice]
        alive = ~(body == ca.wall).all(axis=1)
        alive_last[alive] = step
        if step < horizon:
            batch = kernels.step_rows(ca.table, ca.q, 1, batch)
    deaths = tuple(None if a == horizon else int(a) + 1 for a in alive_last.tolist())
    return SigmaProbeResult(d1, d2, t, trials, horizon, seed, deaths, interior)
