import functools
import itertools

import numpy as np
import pytest

from mulimit import kernels
from mulimit.ca import Configuration
from mulimit.compiler import compile_tm_basic, compile_tm_erasable, compile_tm_memory
from mulimit.errors import InputError, PreconditionError, Refusal
from mulimit.segments import (
    CYCLING,
    DIED,
    SURVIVED,
    analyze_segments,
    find_segments,
    sigma_probe,
    write_events_csv,
)
from mulimit.tm import counting_machine, first_symbol_machine, looping_machine


@functools.lru_cache(maxsize=None)
def compiled(variant, machine_name, t=1):
    machine = {"loop": looping_machine(), "count": counting_machine(t), "first": first_symbol_machine()}[machine_name]
    return {"basic": compile_tm_basic, "erasable": compile_tm_erasable, "memory": compile_tm_memory}[variant](machine)


def test_find_segments_wraps():
    cells = np.array([1, 0, 2, 3, 0, 4])
    assert find_segments(cells, 0) == [(2, 2), (5, 2)]
    assert find_segments(np.zeros(3, dtype=int), 0) == []
    assert find_segments(np.ones(3, dtype=int), 0) == [(0, 3)]


def test_all_walls_single_death():
    ca = compiled("basic", "loop")
    reports = analyze_segments(ca, ca.configuration([ca.wall] * 5), 10)
    assert len(reports) == 1 and reports[0].label == "DIED(0)"


def test_zero_horizon_rejected():
    ca = compiled("basic", "loop")
    with pytest.raises(PreconditionError):
        analyze_segments(ca, ca.configuration([ca.wall, ca.state()]), 0)


def test_no_wall_warns(caplog):
    ca = compiled("basic", "loop")
    reports = analyze_segments(ca, ca.configuration([ca.state()] * 4), 30)
    assert len(reports) == 1 and "no '#'" in caplog.text


def _death_steps(ca, contents, horizon):
    k, n = contents.shape
    rows = np.concatenate([np.full((k, 1), ca.wall, dtype=np.int32), contents.astype(np.int32)], axis=1)
    death = np.full(k, -1)
    for t in range(horizon + 1):
        dead = (rows == ca.wall).all(axis=1) & (death < 0)
        death[dead] = t
        rows = kernels.step_rows(ca.table, ca.q, 1, rows)
    return death


def test_non_halting_segments_die_within_5n_exhaustive_small():
    ca = compiled("basic", "loop")
    states = np.arange(1, ca.q)
    for n in (1, 2):
        contents = np.array(list(itertools.product(states, repeat=n)))
        death = _death_steps(ca, contents, 5 * n)
        assert (death >= 0).all() and death.max() <= 5 * n


def test_non_halting_random_contents_report_died():
    ca = compiled("basic", "loop")
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        cells = [ca.wall] + rng.integers(1, ca.q, size=n).tolist()
        (rep,) = analyze_segments(ca, ca.configuration(cells), 5 * n)
        assert rep.outcome == DIED and rep.outcome_step <= 5 * n


@pytest.mark.parametrize("t", [1, 2, 3])
def test_clean_halting_segment_cycles(t):
    ca = compiled("basic", "count", t)
    (rep,) = analyze_segments(ca, ca.configuration([ca.wall] + ca.clean_segment(2 * t)), 1000)
    assert rep.outcome == CYCLING
    names = [e for _, e in rep.events]
    assert any(e.startswith("F-emitted") for e in names)
    assert any(e.startswith("R-born") for e in names)
    assert not any(e.startswith("cell-turned-#") for e in names)


def test_segments_are_reported_separately():
    ca = compiled("basic", "count", 1)
    cells = [ca.wall] + ca.clean_segment(2) + [ca.wall] + [ca.state()] * 3
    reports = analyze_segments(ca, ca.configuration(cells), 200)
    assert [r.outcome for r in reports] == [CYCLING, DIED]
    assert (reports[1].start, reports[1].length) == (4, 3)


def test_memory_survival_matches_machine():
    machine = first_symbol_machine()
    ca = compiled("memory", "first")
    for n in range(1, 5):
        for mem in itertools.product("01B", repeat=n):
            mem = "".join(mem)
            (rep,) = analyze_segments(ca, ca.configuration([ca.wall] + ca.clean_segment(n, mem)), 200)
            run = machine.run(mem, 1000, max_cells=n)
            assert (rep.outcome != DIED) == (run.halted and run.cells_used <= n), mem


def test_memory_layer_survives_steps():
    ca = compiled("memory", "first")
    cells = [ca.wall] + ca.clean_segment(4, "1010")
    from mulimit import iterate

    trace = iterate(ca, ca.configuration(cells), 40)
    mem = [[ca.decoded[x][3] for x in row[1:]] for row in trace.rows]
    assert all(m == list("1010") for m in mem)


class TestErasable:
    def test_inactive_segment_grows_and_survives(self):
        ca = compiled("erasable", "loop")
        for n in (1, 3, 6):
            cells = [ca.wall] + [ca.state()] * n + [ca.wall] * (4 * n + 4) + [ca.state()] * 2
            trace_len = 20 * n
            (first, *_rest) = analyze_segments(ca, ca.configuration(cells), trace_len)
            assert first.outcome != DIED
            assert any(e.startswith("#-erased-at") for _, e in first.events)

    def test_invasion_reported(self):
        ca = compiled("erasable", "loop")
        cells = [ca.wall] + [ca.state()] * 2 + [ca.wall] + [ca.state()] * 2 + [ca.wall] * 20
        reports = analyze_segments(ca, ca.configuration(cells), 40)
        assert reports[1].label.startswith("INVADED(")

    def test_halting_segment_dies(self):
        ca = compiled("erasable", "count", 1)
        cells = [ca.wall] + ca.clean_segment(4) + [ca.wall] * 6
        (rep,) = analyze_segments(ca, ca.configuration(cells), 100)
        assert rep.outcome == DIED

    def test_sigma_probe_all_die(self):
        for t in (1, 2):
            ca = compiled("erasable", "count", t)
            res = sigma_probe(ca, 1, 2 * t, trials=20, seed=3)
            assert res.all_died and res.lower_bound is not None

    def test_sigma_probe_trivial_interior(self):
        ca = compiled("erasable", "count", 1)
        small = sigma_probe(ca, 1, 2, trials=2, interior="trivial")
        large = sigma_probe(ca, 1, 6, trials=2, interior="trivial")
        assert small.all_died and large.all_died

    def test_sigma_probe_refuses_non_halting(self):
        with pytest.raises(Refusal):
            sigma_probe(compiled("erasable", "loop"), 1, 4)

    def test_sigma_probe_preconditions(self):
        ca = compiled("erasable", "count", 2)
        with pytest.raises(PreconditionError):
            sigma_probe(ca, 1, 3)
        with pytest.raises(InputError):
            sigma_probe(compiled("basic", "count", 2), 1, 4)


def test_events_csv(tmp_path):
    ca = compiled("basic", "count", 1)
    reports = analyze_segments(ca, ca.configuration([ca.wall] + ca.clean_segment(2)), 50)
    path = tmp_path / "events.csv"
    write_events_csv(reports, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,segment_id,event"
    assert lines[1] == "1,0,F-emitted@2"


def test_survived_to_horizon_label():
    ca = compiled("basic", "loop")
    (rep,) = analyze_segments(ca, ca.configuration([ca.wall] + [ca.state()] * 10), 3)
    assert rep.outcome == SURVIVED and rep.label == "SURVIVED-TO-HORIZON"
