import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mulimit import identity_ca, left_shift_ca, wolfram
from mulimit.errors import AlphabetError, CostCapExceeded, PreconditionError
from mulimit.measure import (
    INCONCLUSIVE,
    PERSISTENT,
    VANISHING,
    BernoulliMeasure,
    brute_force_pushforward,
    classify,
    cylinder_measure,
    persistence_report,
    preimage_window_scan,
    pushforward_cylinder,
    pushforward_distribution,
)
from tests.strategies import automata, words_over


def uniform(ca):
    return BernoulliMeasure.uniform(ca.alphabet)


@st.composite
def measures(draw, alphabet):
    weights = draw(st.lists(st.integers(0, 4), min_size=len(alphabet), max_size=len(alphabet)))
    if sum(weights) == 0:
        weights[0] = 1
    total = sum(weights)
    return BernoulliMeasure(alphabet, tuple(Fraction(w, total) for w in weights))


class TestRule184:
    def test_first_step_values(self, rule184):
        mu = uniform(rule184)
        assert pushforward_cylinder(rule184, mu, "00", 1).value == Fraction(3, 16)
        assert pushforward_cylinder(rule184, mu, "10", 1).value == Fraction(5, 16)

    def test_closed_form_for_00(self, rule184):
        # A^n mu[00] = C(2n+1, n) / 4^(n+1); the preimage counts are central binomials
        mu = uniform(rule184)
        for n in range(9):
            res = pushforward_cylinder(rule184, mu, "00", n)
            assert res.value == Fraction(math.comb(2 * n + 1, n), 4 ** (n + 1))
            assert res.preimage_count == math.comb(2 * n + 1, n)

    def test_00_strictly_decreasing(self, rule184):
        mu = uniform(rule184)
        vals = [pushforward_cylinder(rule184, mu, "00", n).value for n in range(9)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_10_never_below_quarter(self, rule184):
        mu = uniform(rule184)
        assert all(pushforward_cylinder(rule184, mu, "10", n).value >= Fraction(1, 4) for n in range(7))

    def test_n0_is_cylinder(self, rule184):
        mu = BernoulliMeasure.from_mapping(rule184.alphabet, {"0": Fraction(1, 3), "1": Fraction(2, 3)})
        assert pushforward_cylinder(rule184, mu, "011", 0).value == cylinder_measure(mu, "011") == Fraction(4, 27)


@given(automata(max_q=3, max_r=1), st.data())
def test_dp_matches_enumeration(ca, data):
    mu = data.draw(measures(ca.alphabet))
    u = data.draw(words_over(ca.alphabet, 1, 3))
    n = data.draw(st.integers(0, 3 if ca.q <= 2 else 2))
    assert pushforward_cylinder(ca, mu, u, n).value == brute_force_pushforward(ca, mu, u, n)


@given(automata(max_q=3), st.integers(0, 3), st.integers(1, 2), st.data())
def test_conservation(ca, n, k, data):
    mu = data.draw(measures(ca.alphabet))
    dist = pushforward_distribution(ca, mu, k, n)
    assert sum(dist.values()) == 1


@given(automata(max_q=2), st.integers(0, 3), st.data())
def test_marginalization(ca, n, data):
    """Summing the right-extensions (or left-extensions) of u recovers u."""
    mu = data.draw(measures(ca.alphabet))
    u = data.draw(words_over(ca.alphabet, 1, 2))
    whole = pushforward_cylinder(ca, mu, u, n).value
    right = sum(pushforward_cylinder(ca, mu, u + (a,), n).value for a in ca.alphabet)
    left = sum(pushforward_cylinder(ca, mu, (a,) + u, n).value for a in ca.alphabet)
    assert whole == right == left


@given(automata(max_q=2), st.integers(0, 3), st.data())
def test_uniform_value_is_preimage_count(ca, n, data):
    u = data.draw(words_over(ca.alphabet, 1, 3))
    res = pushforward_cylinder(ca, uniform(ca), u, n)
    m = len(u) + 2 * ca.radius * n
    assert res.value == Fraction(res.preimage_count, ca.q**m)


def test_identity_and_shift_preserve_bernoulli():
    for ca in (identity_ca(("0", "1"), 1), left_shift_ca()):
        mu = BernoulliMeasure.from_mapping(ca.alphabet, {"0": Fraction(1, 5), "1": Fraction(4, 5)})
        for n in range(4):
            assert pushforward_cylinder(ca, mu, "01", n).value == Fraction(4, 25)


def test_cost_cap_refuses(rule184):
    with pytest.raises(CostCapExceeded):
        pushforward_cylinder(rule184, uniform(rule184), "00", 12, cap=10**4)


def test_measure_alphabet_mismatch(rule184):
    with pytest.raises(AlphabetError):
        pushforward_cylinder(rule184, BernoulliMeasure.uniform(("a", "b")), "00", 1)


def test_measure_must_sum_to_one():
    with pytest.raises(PreconditionError):
        BernoulliMeasure(("0", "1"), (Fraction(1, 2), Fraction(1, 3)))


def test_measure_document_round_trip():
    mu = BernoulliMeasure.from_mapping(("0", "1"), {"0": Fraction(1, 7), "1": Fraction(6, 7)})
    assert BernoulliMeasure.from_document(("0", "1"), mu.to_document()) == mu
    assert BernoulliMeasure.from_document(("0", "1"), "uniform").is_uniform


class TestWindowScan:
    def test_rule_184_finds_witness(self, rule184):
        scan = preimage_window_scan(rule184, None, "10", "0", 1)
        assert scan.found
        w = scan.witness
        assert len(w) == 4 and w[0] == "0" and w[3] == "0"
        assert brute_force_pushforward(rule184, uniform(rule184), "10", 1) > 0

    def test_rule_184_no_witness(self, rule184):
        assert not preimage_window_scan(rule184, None, "00", "11", 1).found

    def test_witness_really_maps_to_u(self, rule184):
        from mulimit.ca import Configuration

        scan = preimage_window_scan(rule184, None, "01", "1", 2)
        if scan.found:
            cells = rule184.encode(scan.witness)
            rows = [list(cells)]
            for _ in range(2):
                prev = rows[-1]
                rows.append([rule184.table[prev[i] * 4 + prev[i + 1] * 2 + prev[i + 2]] for i in range(len(prev) - 2)])
            assert rule184.decode(rows[-1]) == ("0", "1")

    def test_identity(self):
        ca = identity_ca(("0", "1"), 1)
        scan = preimage_window_scan(ca, None, "0", "0", 1)
        assert scan.found and scan.witness == ("0", "0", "0")


class TestClassify:
    def test_rules(self):
        assert classify([0.5] + [0.01] * 8, 0.05) == VANISHING
        assert classify([0.5] * 9, 0.05) == PERSISTENT
        assert classify([0.04] * 9, 0.05) == INCONCLUSIVE  # never halved
        assert classify([0.5, 0.01, 0.01, 0.2, 0.2, 0.2, 0.01, 0.2, 0.01], 0.05) == INCONCLUSIVE

    def test_rule_184_00_reports(self, rule184):
        mu = uniform(rule184)
        short = persistence_report(rule184, mu, "00", 30, 0.05)
        # C(2n+1,n)/4^(n+1) only drops below 0.05 around n = 32
        assert short.verdict == PERSISTENT
        assert all(p.method == "exact" for p in short.series[:10])
        long = persistence_report(rule184, mu, "00", 64, 0.05, seed=3)
        assert long.verdict == VANISHING
        assert long.series[-1].method == "montecarlo"

    def test_rule_184_10_persistent(self, rule184):
        rep = persistence_report(rule184, uniform(rule184), "10", 30, 0.05)
        assert rep.verdict == PERSISTENT


def test_incomplete_measure_warns(rule184):
    mu = BernoulliMeasure.from_mapping(rule184.alphabet, {"0": 1})
    with pytest.warns(UserWarning):
        persistence_report(rule184, mu, "0", 4, 0.1)


def test_binary_words_enumerated():
    ca = wolfram(30)
    dist = pushforward_distribution(ca, uniform(ca), 3, 2)
    assert set(dist) == set(itertools.product("01", repeat=3))


@given(automata(max_q=3), st.integers(0, 2), st.integers(1, 2), st.data())
def test_joint_distribution_matches_single_words(ca, n, k, data):
    mu = data.draw(measures(ca.alphabet))
    dist = pushforward_distribution(ca, mu, k, n)
    for word, value in dist.items():
        assert value == pushforward_cylinder(ca, mu, word, n).value
