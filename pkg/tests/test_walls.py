import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mulimit import identity_ca, left_shift_ca
from mulimit.errors import EmptyConfigurationError, PreconditionError
from mulimit.walls import (
    ANCHOR,
    CERTIFIED,
    NO_WALL,
    NON_SENSITIVE,
    REFUTED,
    AbstractConfiguration,
    abstract_step,
    bricks_up_to,
    centred_start,
    check_foot,
    extend_wall_foot,
    replay_certificate,
    sensitivity_probe,
)
from tests.strategies import automata, words_over


def test_centred_positions():
    assert centred_start(1) == -1
    assert centred_start(2) == -1
    assert centred_start(3) == -2
    assert centred_start(4) == -2
    for length in range(1, 9):
        assert centred_start(length) <= ANCHOR < centred_start(length) + length


def test_left_shift_abstract_step(shift):
    a = AbstractConfiguration(0, (0b01, 0b10, 0b10), 2)  # {0}, {1}, {1}
    b = abstract_step(shift, a)
    assert b.sets(shift) == [frozenset({"1"}), frozenset({"1"}), frozenset({"0", "1"})]
    a = AbstractConfiguration(0, (0b10, 0b01), 2)  # {1}, {0}
    assert abstract_step(shift, AbstractConfiguration(0, (0b11,) + a.cells, 2)).sets(shift) == [
        frozenset({"1"}),
        frozenset({"0"}),
        frozenset({"0", "1"}),
    ]


@given(automata(max_q=3), st.integers(2, 6), st.integers(0, 10**6))
def test_abstraction_is_sound(ca, width, seed):
    """Every concrete window inside an abstract one steps inside its image."""
    rng = np.random.default_rng(seed)
    full = (1 << ca.q) - 1
    masks = tuple(int(m) for m in rng.integers(1, full + 1, size=width))
    a = AbstractConfiguration(0, masks, ca.q)
    r = ca.radius
    members = [[b for b in range(ca.q) if m >> b & 1] for m in masks]
    concrete = np.array([rng.choice(mem) for mem in members])
    outside = rng.integers(0, ca.q, size=(2 * r,))
    ext = np.concatenate([outside[:r], concrete, outside[r:]])
    img = np.array(
        [ca.table[ca.code_of(ext[i : i + 2 * r + 1])] for i in range(width)], dtype=np.int64
    )
    assert abstract_step(ca, a).represents(img, 0)


@given(automata(max_q=2), st.data())
def test_certificates_replay_concretely(ca, data):
    foot = data.draw(words_over(ca.alphabet, 1, 3))
    v = check_foot(ca, foot, horizon=200)
    if v.status == CERTIFIED:
        assert replay_certificate(ca, v.certificate, trials=30, seed=1) == 0


@given(automata(max_q=2), st.data())
def test_refutations_are_witnessed(ca, data):
    """A REFUTED(t) verdict means two completions of the foot disagree at the anchor."""
    foot = data.draw(words_over(ca.alphabet, 1, 3))
    v = check_foot(ca, foot, horizon=200)
    if v.status != REFUTED:
        return
    t, r = v.step, ca.radius
    codes = ca.encode(foot)
    lo, start = ANCHOR - r * t, centred_start(len(codes))
    width = 2 * r * t + 1
    values = set()
    for fill in itertools.product(range(ca.q), repeat=width):
        row = list(fill)
        if any(0 <= i - lo < width and row[i - lo] != x for i, x in enumerate(codes, start=start)):
            continue
        for _ in range(t):
            row = [ca.table[ca.code_of(row[i : i + 2 * r + 1])] for i in range(len(row) - 2 * r)]
        values.add(row[0])
    assert len(values) > 1


class TestSpreading:
    def test_s_certified(self, spreading):
        v = check_foot(spreading, "s")
        assert v.status == CERTIFIED
        assert v.certificate.bricks == (("s",),)
        assert v.certificate.p == 1

    def test_bricks_are_powers_of_s(self, spreading):
        found = bricks_up_to(spreading, 2, 3)
        assert found.words
        assert all(set(w) == {"s"} for w in found.words)
        assert ("s",) in found and ("s", "s") in found

    def test_base_letters_refuted(self, spreading):
        assert check_foot(spreading, "0").status == REFUTED
        assert check_foot(spreading, "01").status == REFUTED

    def test_non_sensitive(self, spreading):
        res = sensitivity_probe(spreading, 1)
        assert res.status == NON_SENSITIVE and res.witness == ("s",)

    def test_extension(self, spreading):
        ext = extend_wall_foot(spreading, "s", "01")
        assert ext.verdict.status == CERTIFIED and ext.bound_met
        assert ext.verdict.certificate.max_brick_width >= 2

    def test_extension_precondition(self, spreading):
        with pytest.raises(PreconditionError):
            extend_wall_foot(spreading, "0", "1")

    def test_certificates_replay(self, spreading):
        for foot in ("s", "ss", "0s1", "s01s"):
            v = check_foot(spreading, foot)
            assert replay_certificate(spreading, v.certificate, trials=100) == 0


def test_left_shift_refutes_everything(shift):
    for length in range(1, 4):
        for foot in itertools.product("01", repeat=length):
            assert check_foot(shift, foot).status == REFUTED
    assert sensitivity_probe(shift, 2).status == NO_WALL


def test_identity_certifies_everything():
    ca = identity_ca(("0", "1"), 1)
    for length in range(1, 4):
        for foot in itertools.product("01", repeat=length):
            v = check_foot(ca, foot)
            assert v.status == CERTIFIED
            assert v.certificate.bricks == (tuple(foot),)


def test_empty_foot_rejected(spreading):
    with pytest.raises(EmptyConfigurationError):
        check_foot(spreading, "")


def test_verdict_json(spreading):
    doc = check_foot(spreading, "s").to_json()
    assert doc["verdict"] == CERTIFIED and doc["bricks"] == [["s"]]


def test_replay_catches_a_forged_certificate(spreading):
    import dataclasses

    v = check_foot(spreading, "s")
    forged = dataclasses.replace(v.certificate, step_words=(("0",),), bricks=(("0",),), n0=0, p=1)
    assert replay_certificate(spreading, forged, trials=20) > 0
