import functools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mulimit import iterate, parse_rule
from mulimit.compiler import (
    BASIC_PRIORITY,
    ERASABLE_PRIORITY,
    LEFT_MOVERS,
    RIGHT_MOVERS,
    WALL,
    as_compiled,
    as_compiled_document,
    compile_tm_basic,
    compile_tm_erasable,
    compile_tm_memory,
    parse_state_name,
    state_name,
)
from mulimit.errors import InputError
from mulimit.tm import bouncing_machine, counting_machine, immediate_halt_machine, looping_machine

LOOP = looping_machine()


@pytest.fixture(scope="module")
def basic_loop():
    return _compiled("basic")


@pytest.fixture(scope="module")
def erasable_loop():
    return _compiled("erasable")


def signals(ca, row):
    return [ca.signal_names[x] for x in row]


def test_alphabet_sizes():
    assert compile_tm_basic(LOOP).q == 1 + 3 * 3 * 5 == 46
    assert compile_tm_memory(LOOP).q == 1 + 3 * 3 * 5 * 3 == 136
    assert compile_tm_erasable(LOOP).q == 1 + 3 * 3 * 8 == 73
    assert compile_tm_basic(bouncing_machine()).q == 1 + 5 * 3 * 5


def test_state_names_round_trip():
    assert parse_state_name(state_name("q0", "B", "L")) == ("q0", "B", "L", None)
    assert parse_state_name(state_name("-", "1", "DR", "0")) == ("-", "1", "DR", "0")
    assert parse_state_name(WALL) is None


def test_wall_is_inalterable_in_basic(basic_loop):
    q = basic_loop.q
    table = basic_loop.table.reshape(q, q, q)
    assert (table[:, basic_loop.wall, :] == basic_loop.wall).all()


def test_wall_only_erased_by_d_in_erasable(erasable_loop):
    ca = erasable_loop
    q = ca.q
    table = ca.table.reshape(q, q, q)
    left, right = np.nonzero(table[:, ca.wall, :] != ca.wall)
    assert left.size
    assert all(ca.signal_names[x] == "D" and ca.heads[x] != LOOP.final for x in left)


def test_memory_layer_is_read_only():
    ca = compile_tm_memory(bouncing_machine())
    q = ca.q
    mem = np.array([d[3] if d else "#" for d in ca.decoded])
    table = ca.table.reshape(q, q, q)
    out = table  # out[l, c, r]
    centre_mem = np.broadcast_to(mem[None, :, None], out.shape)
    survived = out != ca.wall
    assert (mem[out][survived] == centre_mem[survived]).all()


def test_document_round_trip(basic_loop):
    doc = basic_loop.to_document()
    again = parse_rule(json.dumps(doc))
    assert np.array_equal(again.table, basic_loop.table)
    assert "(q0,B|L)" in again.alphabet
    rec = as_compiled_document(doc)
    assert rec.variant == "basic" and rec.machine.transitions == LOOP.transitions


def test_as_compiled_detects_variant(erasable_loop):
    plain = parse_rule(erasable_loop.to_document())
    assert as_compiled(plain).variant == "erasable"
    with pytest.raises(InputError):
        as_compiled(parse_rule("wolfram:184"))


def test_immediate_halt_emits_f_at_step_one():
    ca = compile_tm_basic(immediate_halt_machine())
    trace = iterate(ca, ca.configuration([ca.wall] + ca.clean_segment(2)), 1)
    assert "F" in signals(ca, trace.rows[1])
    assert "F" not in signals(ca, trace.rows[0])


def test_reset_restarts_the_machine():
    """After F reaches the border, the R wave leaves a fresh run behind it."""
    ca = compile_tm_basic(counting_machine(2))
    trace = iterate(ca, ca.configuration([ca.wall] + ca.clean_segment(4)), 12)
    starts = [t for t in range(len(trace)) if ca.heads[trace.rows[t][1]] == "q0"]
    assert starts[0] == 0 and len(starts) >= 2


@functools.lru_cache(maxsize=None)
def _compiled(variant):
    return compile_tm_basic(LOOP) if variant == "basic" else compile_tm_erasable(LOOP)


def _meeting(variant, right, left, gap):
    """A right-mover and a left-mover meeting at step 1 in a long blank segment."""
    ca = _compiled(variant)
    n = 14
    seg = [ca.state() for _ in range(n)]
    i = 5
    seg[i] = ca.state("-", "B", right)
    seg[i + 1 + gap] = ca.state("-", "B", left)
    cells = [ca.wall] + seg + [ca.wall] * 3
    trace = iterate(ca, ca.configuration(cells), 1)
    window = trace.rows[1][1 + i - 1 : 1 + i + 3 + gap]
    return signals(ca, window)


BASIC_PAIRS = [(r, l) for r in ("R", "D") for l in ("L", "F")]
ERASABLE_PAIRS = [(r, l) for r in ("R", "D", "CR", "DR") for l in ("L", "CL", "DL")]


@pytest.mark.parametrize("right,left", BASIC_PAIRS)
@pytest.mark.parametrize("gap", [0, 1])
def test_priority_law_basic(right, left, gap):
    seen = _meeting("basic", right, left, gap)
    winner, loser = (right, left) if BASIC_PRIORITY[right] > BASIC_PRIORITY[left] else (left, right)
    assert winner in seen and loser not in seen


@pytest.mark.parametrize("right,left", ERASABLE_PAIRS)
@pytest.mark.parametrize("gap", [0, 1])
def test_priority_law_erasable(right, left, gap):
    seen = _meeting("erasable", right, left, gap)
    winner, loser = (right, left) if ERASABLE_PRIORITY[right] > ERASABLE_PRIORITY[left] else (left, right)
    assert winner in seen and loser not in seen


def test_priority_orders_are_total():
    assert sorted(BASIC_PRIORITY, key=BASIC_PRIORITY.get) == ["-", "L", "F", "R", "D"]
    order = sorted(ERASABLE_PRIORITY, key=ERASABLE_PRIORITY.get)
    assert order == ["-", "L", "R", "CR", "CL", "D", "DR", "DL"]
    assert LEFT_MOVERS.isdisjoint(RIGHT_MOVERS)


def test_d_reaching_right_wall_without_final_state(erasable_loop):
    ca = erasable_loop
    cells = [ca.wall, ca.state(), ca.state("-", "B", "D"), ca.wall, ca.wall]
    row = iterate(ca, ca.configuration(cells), 1).rows[1]
    assert signals(ca, row[2:4]) == ["CL", "CR"]
    assert ca.decoded[row[3]][:2] == ("-", "B")


def test_d_over_final_state_erases_segment():
    ca = compile_tm_erasable(immediate_halt_machine())
    cells = [ca.wall, ca.state(), ca.state(), ca.state("qf", "B", "D"), ca.state(), ca.state(), ca.wall]
    trace = iterate(ca, ca.configuration(cells), 4)
    assert signals(ca, trace.rows[1][2:5]) == ["DL", "#", "DR"]
    assert (trace.rows[4] == ca.wall).all()


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_wall_permanence_on_random_rows(seed, width):
    ca = _compiled("basic")
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, ca.q, size=3 * width)
    trace = iterate(ca, ca.configuration(cells), 3 * width)
    walls = trace.rows == ca.wall
    assert (walls[1:] >= walls[:-1]).all()
