"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from mulimit.ca import CellularAutomaton


@st.composite
def automata(draw, max_q=3, max_r=1):
    q = draw(st.integers(1, max_q))
    r = draw(st.integers(0, max_r))
    size = q ** (2 * r + 1)
    table = draw(st.lists(st.integers(0, q - 1), min_size=size, max_size=size))
    alphabet = tuple("abc"[:q])
    return CellularAutomaton(alphabet, r, np.array(table, dtype=np.int32))


def words_over(alphabet, min_size=1, max_size=4):
    return st.lists(st.sampled_from(alphabet), min_size=min_size, max_size=max_size).map(tuple)
