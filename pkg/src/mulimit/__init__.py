"""Tools for the mu-limit (persistent) behaviour of one-dimensional cellular automata."""

from .ca import (
    CellularAutomaton,
    Configuration,
    SpaceTimeTrace,
    apply_global,
    identity_ca,
    iterate,
    left_shift_ca,
    load_rule,
    parse_rule,
    spreading_state_ca,
    wolfram,
    word_occurrences,
)
from .kernels import BACKEND

__version__ = "0.1.0"
