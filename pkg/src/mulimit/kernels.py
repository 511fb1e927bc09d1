"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``MULIMIT_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
by the equivalence tests).
"""

import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("MULIMIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

step_rows = _impl.step_rows
iterate_rows = _impl.iterate_rows
run_trace = _impl.run_trace
count_words = _impl.count_words


def backend(name):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _core_py
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
