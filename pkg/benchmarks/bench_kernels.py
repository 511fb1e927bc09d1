"""Compare the Cython kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are checked for identical output before timing.  If the
extension is not built only the fallback is timed.
"""

import argparse
import timeit

import numpy as np

from mulimit import wolfram
from mulimit.compiler import compile_tm_basic
from mulimit.kernels import backend
from mulimit.tm import looping_machine


def cases():
    r184 = wolfram(184)
    compiled = compile_tm_basic(looping_machine())
    rng = np.random.default_rng(0)
    small = rng.integers(0, 2, size=(64, 4096), dtype=np.int32)
    big_q = rng.integers(0, compiled.q, size=(64, 1024), dtype=np.int32)
    t184 = np.ascontiguousarray(r184.table, dtype=np.int32)
    tcomp = np.ascontiguousarray(compiled.table, dtype=np.int32)
    return {
        "iterate_rows rule184 64x4096 x64": lambda k: k.iterate_rows(t184, 2, 1, small, 64),
        "iterate_rows compiled q=46 64x1024 x64": lambda k: k.iterate_rows(tcomp, compiled.q, 1, big_q, 64),
        "run_trace rule184 4096 x256": lambda k: k.run_trace(t184, 2, 1, small[0], 256),
        "count_words k=2 64x4096": lambda k: k.count_words(small, 2, 2),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = {"python": backend("python")}
    try:
        impls["cython"] = backend("cython")
    except ImportError:
        print("cython extension not built; timing the fallback only")

    print(f"{'kernel':42s} " + " ".join(f"{name:>10s}" for name in impls) + "   speedup")
    for label, fn in cases().items():
        outputs = [np.asarray(fn(k)) for k in impls.values()]
        if len(outputs) == 2 and not np.array_equal(outputs[0], outputs[1]):
            raise SystemExit(f"backends disagree on {label}")
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for k in impls.values()]
        speedup = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:42s} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times) + f"  {speedup}")


if __name__ == "__main__":
    main()
