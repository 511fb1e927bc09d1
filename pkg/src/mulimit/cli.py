"""Command-line entry point: ``mulimit <subcommand> ...``.

Every run writes ``<out>.manifest.json`` next to its outputs, recording the
argument vector, parameters, input digests, seed and tool version, so that
re-running the stored ``argv`` reproduces the outputs.

Exit codes: 0 success, 2 input error, 3 cost cap or refusal, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .ca import CellularAutomaton, Configuration, iterate, load_rule, parse_rule, random_configuration
from .compiler import VARIANTS, WALL, as_compiled, as_compiled_document, compile_tm
from .errors import CostCapExceeded, InputError, InvariantViolation, Refusal, RuleParseError
from .export import write_pgm, write_trace_csv
from .measure import DEFAULT_COST_CAP, BernoulliMeasure, pushforward_cylinder
from .montecarlo import SamplingPlan, default_plan, sample_series
from .segments import analyze_segments, non_invasive_segment, reports_to_json, sigma_probe, write_events_csv
from .tm import load_machine
from .walls import CERTIFIED, bricks_up_to, sensitivity_probe

log = logging.getLogger("mulimit")

EXIT_OK, EXIT_INPUT, EXIT_REFUSED, EXIT_INTERNAL = 0, 2, 3, 4


# -- helpers ----------------------------------------------------------------------

def _digest(path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


class _Run:
    """Collects what the manifest needs while a subcommand executes."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = []
        self.out = Path(args.out)
        self.out.parent.mkdir(parents=True, exist_ok=True)

    def input(self, name, spec):
        if spec is None:
            return
        entry = {"spec": str(spec)}
        if Path(str(spec)).is_file():
            entry["sha256"] = _digest(spec)
        self.inputs[name] = entry

    def path(self, suffix) -> Path:
        p = Path(f"{self.out}{suffix}")
        self.outputs.append(str(p))
        return p

    def write_manifest(self):
        params = {k: v for k, v in vars(self.args).items() if k not in ("handler",)}
        manifest = {
            "subcommand": self.args.command,
            "argv": self.argv,
            "inputs": self.inputs,
            "parameters": params,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "kernel_backend": kernels.BACKEND,
            "outputs": self.outputs,
        }
        path = Path(f"{self.out}.manifest.json")
        path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
        return path


def _want(args, kind) -> bool:
    """Both formats unless one of ``--json``/``--csv`` is given."""
    if not args.json and not args.csv:
        return True
    return getattr(args, kind)


def _read_rule_document(spec):
    """Rule from ``wolfram:<n>`` or a path; returns (automaton, decoded JSON or None)."""
    text = str(spec)
    if text.startswith("wolfram:"):
        return parse_rule(text), None
    try:
        content = Path(text).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuleParseError(str(exc), text) from None
    ca = parse_rule(content)
    return ca, json.loads(content)


def _parse_word(ca: CellularAutomaton, text: str):
    if all(len(a) == 1 for a in ca.alphabet) and " " not in text.strip():
        return tuple(text.strip())
    return tuple(text.split())


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# -- simulate ---------------------------------------------------------------------

def cmd_simulate(args, run: _Run) -> int:
    run.input("rule", args.rule)
    ca = load_rule(args.rule)
    if args.config is not None:
        text = args.config
        if Path(text).is_file():
            run.input("config", text)
            text = Path(text).read_text(encoding="utf-8").strip()
        c0 = Configuration.from_word(ca, _parse_word(ca, text))
    else:
        rng = np.random.Generator(np.random.Philox(args.seed))
        c0 = random_configuration(ca, args.width, rng)
    trace = iterate(ca, c0, args.steps)
    write_pgm(trace.rows, ca.q, run.path(".pgm"))
    if _want(args, "csv"):
        write_trace_csv(trace.rows, ca.alphabet, run.path(".csv"))
    if args.json:
        doc = {"alphabet": list(ca.alphabet), "rows": trace.rows.tolist()}
        run.path(".json").write_text(json.dumps(doc) + "\n")
    print(f"simulated {trace.steps} steps on width {c0.width}: {len(trace)} rows")
    return EXIT_OK


# -- measure ----------------------------------------------------------------------

def _load_measure(args, ca, run):
    if args.measure is None:
        return BernoulliMeasure.uniform(ca.alphabet)
    run.input("measure", args.measure)
    try:
        doc = json.loads(Path(args.measure).read_text(encoding="utf-8"))
    except OSError as exc:
        raise RuleParseError(str(exc), args.measure) from None
    except json.JSONDecodeError as exc:
        raise RuleParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return BernoulliMeasure.from_document(ca.alphabet, doc)


def cmd_measure(args, run: _Run) -> int:
    run.input("rule", args.rule)
    ca = load_rule(args.rule)
    mu = _load_measure(args, ca, run)
    word = _parse_word(ca, args.word)
    ca.encode(word)
    rows = []
    for n in range(args.steps + 1):
        try:
            res = pushforward_cylinder(ca, mu, word, n, args.cap)
        except CostCapExceeded:
            break
        rows.append({"n": n, "value": res.value, "method": "exact", "ci_halfwidth": None})
    if len(rows) < args.steps + 1:
        plan = default_plan(ca, args.steps, len(word), seed=args.seed, words=[word])
        plan = SamplingPlan(
            args.width or plan.width, args.trials or plan.trials, args.steps, args.seed, len(word), (word,), args.threads
        )
        fs = sample_series(ca, mu, plan)
        denom = plan.trials * plan.width
        for n in range(len(rows), args.steps + 1):
            rows.append({
                "n": n,
                "value": Fraction(int(fs.sums[word][n]), denom),
                "method": "montecarlo",
                "ci_halfwidth": float(fs.halfwidths[word][n]),
            })
    if _want(args, "csv"):
        with open(run.path(".csv"), "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["n", "value_num", "value_den", "method"])
            for r in rows:
                out.writerow([r["n"], r["value"].numerator, r["value"].denominator, r["method"]])
    if _want(args, "json"):
        doc = {
            "word": list(word),
            "measure": mu.to_document(),
            "rows": [dict(r, value=_frac(r["value"])) for r in rows],
        }
        run.path(".json").write_text(json.dumps(doc, indent=2) + "\n")
    for r in rows:
        print(f"n={r['n']} {_frac(r['value'])} {r['method']}")
    return EXIT_OK


# -- walls ------------------------------------------------------------------------

def cmd_walls(args, run: _Run) -> int:
    run.input("rule", args.rule)
    ca = load_rule(args.rule)
    max_brick = args.max_brick or max(args.max_foot, 1)
    found = bricks_up_to(ca, args.max_foot, max_brick, args.horizon)
    sens = sensitivity_probe(ca, args.max_foot, args.horizon)
    table = [v.to_json() for v in found.verdicts]
    for v, row in zip(found.verdicts, table):
        row["foot"] = ca.show(ca.encode(v.foot))
        if v.certificate is not None:
            row["bricks"] = [ca.show(ca.encode(b)) for b in v.certificate.bricks]
    if _want(args, "csv"):
        with open(run.path(".csv"), "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["foot", "verdict", "n0", "p", "bricks", "max_brick_width"])
            for row in table:
                out.writerow([
                    row["foot"], row["verdict"], row.get("n0"), row.get("p"),
                    " ".join(row.get("bricks") or []), row.get("max_brick_width"),
                ])
    if _want(args, "json"):
        doc = {
            "verdicts": table,
            "bricks": sorted(ca.show(ca.encode(b)) for b in found.words),
            "sensitivity": sens.status,
            "witness": None if sens.witness is None else ca.show(ca.encode(sens.witness)),
        }
        run.path(".json").write_text(json.dumps(doc, indent=2) + "\n")
    for row in table:
        extra = f" bricks={row['bricks']}" if row["verdict"] == CERTIFIED else ""
        print(f"{row['foot']}: {row['verdict']}{extra}")
    witness = "" if sens.witness is None else f" (foot {ca.show(ca.encode(sens.witness))})"
    print(f"sensitivity: {sens.status}{witness}")
    return EXIT_OK


# -- compile-tm -------------------------------------------------------------------

def cmd_compile_tm(args, run: _Run) -> int:
    run.input("tm", args.tm)
    machine = load_machine(args.tm)
    ca = compile_tm(machine, args.variant)
    path = run.path(".json")
    path.write_text(json.dumps(ca.to_document()) + "\n")
    print(f"{args.variant} construction: {ca.q} states, written to {path}")
    return EXIT_OK


# -- segments ---------------------------------------------------------------------

def parse_init(ca, spec: str) -> list[int]:
    """Initial configuration from whitespace-separated tokens.

    ``#`` or ``#*K`` for walls, ``clean:N`` (optionally ``clean:N:MEMORY``)
    for a segment ready to run the machine, ``blank:N`` for blank cells
    without signals, ``ni:N`` for a blank segment with R on its first cell,
    and any compiled state name such as ``(q0,B|L)``.
    """
    cells = []
    for tok in spec.split():
        head, _, rest = tok.partition(":")
        if tok == WALL:
            cells.append(ca.wall)
        elif tok.startswith("#*"):
            cells.extend([ca.wall] * int(tok[2:]))
        elif head == "clean":
            length, _, mem = rest.partition(":")
            cells.extend(ca.clean_segment(int(length), mem or None))
        elif head == "blank":
            cells.extend([ca.state()] * int(rest))
        elif head == "ni":
            cells.extend(non_invasive_segment(ca, int(rest)))
        else:
            cells.append(ca.index(tok))
    if not cells:
        raise InputError("empty initial configuration")
    return cells


def cmd_segments(args, run: _Run) -> int:
    if args.tm is not None:
        run.input("tm", args.tm)
        ca = compile_tm(load_machine(args.tm), args.variant)
    elif args.rule is not None:
        run.input("rule", args.rule)
        plain, doc = _read_rule_document(args.rule)
        ca = as_compiled_document(doc) if doc is not None else as_compiled(plain)
    else:
        raise InputError("segments needs --rule or --tm")
    if args.sigma is not None:
        d1, d2 = args.sigma
        res = sigma_probe(ca, d1, d2, args.trials, args.seed, interior=args.interior)
        run.path(".json").write_text(json.dumps(res.to_json(), indent=2) + "\n")
        print(f"sigma({d1},{d2}) >= {res.lower_bound}; all died: {res.all_died}")
        return EXIT_OK
    init = args.init
    if Path(init).is_file():
        run.input("init", init)
        init = Path(init).read_text(encoding="utf-8")
    c0 = Configuration(ca.alphabet, np.array(parse_init(ca, init), dtype=np.int32))
    reports = analyze_segments(ca, c0, args.horizon)
    if _want(args, "json"):
        run.path(".json").write_text(reports_to_json(reports) + "\n")
    if _want(args, "csv"):
        write_events_csv(reports, run.path(".events.csv"))
    for r in reports:
        print(f"segment {r.segment_id} start={r.start} length={r.length}: {r.label}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mulimit", description="Persistent behaviour of one-dimensional cellular automata.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_out):
        sp.add_argument("--out", default=default_out, help="output path prefix")
        sp.add_argument("--json", action="store_true", help="write JSON output")
        sp.add_argument("--csv", action="store_true", help="write CSV output")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("simulate", help="iterate an automaton and export the space-time diagram")
    sp.add_argument("--rule", required=True, help="rule document path or wolfram:<n>")
    sp.add_argument("--config", help="initial word (or a file holding it)")
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--steps", type=int, required=True)
    common(sp, "trace")
    sp.set_defaults(handler=cmd_simulate)

    sp = sub.add_parser("measure", help="image measure of a cylinder along the orbit")
    sp.add_argument("--rule", required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--uniform", action="store_true", help="uniform Bernoulli measure (default)")
    g.add_argument("--measure", help="measure document path")
    sp.add_argument("--word", required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--cap", type=int, default=DEFAULT_COST_CAP, help="exact-engine cost cap")
    sp.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials")
    sp.add_argument("--width", type=int, default=None, help="Monte-Carlo configuration width")
    common(sp, "measure")
    sp.set_defaults(handler=cmd_measure)

    sp = sub.add_parser("walls", help="certify or refute wall feet and probe sensitivity")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--max-foot", type=int, required=True)
    sp.add_argument("--max-brick", type=int, default=None)
    sp.add_argument("--horizon", type=int, default=None)
    common(sp, "walls")
    sp.set_defaults(handler=cmd_walls)

    sp = sub.add_parser("compile-tm", help="compile a Turing machine into a segment automaton")
    sp.add_argument("--tm", required=True, help="machine document path")
    sp.add_argument("--variant", choices=VARIANTS, default="basic")
    common(sp, "compiled")
    sp.set_defaults(handler=cmd_compile_tm)

    sp = sub.add_parser("segments", help="segment lifecycles of a compiled automaton")
    sp.add_argument("--rule", help="compiled rule document")
    sp.add_argument("--tm", help="machine document (compiled on the fly)")
    sp.add_argument("--variant", choices=VARIANTS, default="basic")
    sp.add_argument("--init", default="# clean:2", help="initial configuration tokens or file")
    sp.add_argument("--horizon", type=int, default=200)
    sp.add_argument("--sigma", type=int, nargs=2, metavar=("D1", "D2"), help="run the sigma probe instead")
    sp.add_argument("--trials", type=int, default=32)
    sp.add_argument("--interior", choices=("random", "trivial"), default="random")
    common(sp, "segments")
    sp.set_defaults(handler=cmd_segments)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run = _Run(args, argv)
        code = args.handler(args, run)
        run.write_manifest()
        return code
    except (CostCapExceeded, Refusal) as exc:
        print(f"mulimit: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except InputError as exc:
        print(f"mulimit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"mulimit: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"mulimit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
