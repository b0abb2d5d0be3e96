"""Command line front end.

Exit codes: 0 trace found (or formula true), 1 no trace up to the bound
(or formula false), 2 input error, 3 solver error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .bmc import CLOSURES, WitnessError, prepare, solve_incremental
from .formula import MitlSyntaxError, Not, parse_mitl
from .smt import DEFAULT_SOLVER, SolverError
from .ta import (
    DeadlockError, ModelError, close_lasso, fischer_model, parse_network, random_run, run_to_trace,
)
from .traces import TraceError, explain, parse_trace, satisfies

EXIT_FOUND, EXIT_NONE, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class StageError(Exception):
    def __init__(self, stage: str, msg: str):
        super().__init__(f"error [{stage}]: {msg}")


def _read(path: str, stage: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StageError(stage, f"cannot read {path}: {e.strerror}") from None


def _formula(args):
    if args.prop is not None and args.prop_file is not None:
        raise StageError("formula", "give either --prop or --prop-file")
    if args.prop_file is not None:
        text = _read(args.prop_file, "formula")
    elif args.prop is not None:
        text = args.prop
    else:
        raise StageError("formula", "a formula is required (--prop or --prop-file)")
    if not text.strip():
        raise StageError("formula", "empty formula")
    try:
        return parse_mitl(text)
    except MitlSyntaxError as e:
        raise StageError("formula", str(e)) from None


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_check(args) -> int:
    try:
        net = parse_network(_read(args.model, "model"))
    except ModelError as e:
        raise StageError("model", str(e)) from None
    f = _formula(args)
    if args.verify:
        f = Not(f)
    try:
        p = prepare(net, f)
    except (ModelError, ValueError) as e:
        raise StageError("encode", str(e)) from None
    t0 = time.monotonic()
    try:
        v = solve_incremental(p.sts, args.max_bound, p.formula, args.solver, p.names,
                              args.closure, timeout=args.timeout)
    except SolverError as e:
        print(f"error [solver]: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except WitnessError as e:
        print(f"error [witness]: {e}", file=sys.stderr)
        return EXIT_SOLVER
    elapsed = time.monotonic() - t0
    print(f"verdict={v.status}")
    print(f"bound={v.bound}")
    print(f"time={elapsed:.3f}")
    print(f"completeness_bound={v.stats['completeness_bound']}")
    if args.stats:
        print(f"checks={v.stats.get('checks', 0)}")
        print(f"solve_time={v.stats.get('solve_time', 0)}")
        for k, res, secs in v.stats["bounds"]:
            print(f"bound.{k}={res} {secs}")
    if v.status == "unknown":
        print("error [solver]: solver answered unknown or timed out", file=sys.stderr)
        return EXIT_SOLVER
    if v.status == "witness":
        if args.witness:
            _write(args.witness, v.witness.to_text())
            print(f"witness={args.witness}")
        if args.verify:
            print("property=violated")
            return EXIT_NONE
        return EXIT_FOUND
    if args.verify:
        print(f"property=holds-up-to-bound {v.bound}")
        return EXIT_FOUND
    print(f"no trace up to bound {v.bound}; longer traces may exist")
    return EXIT_NONE


def cmd_gen_fischer(args) -> int:
    try:
        text = fischer_model(args.agents, args.delay)
    except ValueError as e:
        raise StageError("arguments", str(e)) from None
    _write(args.output, text)
    return EXIT_FOUND


def cmd_eval_trace(args) -> int:
    try:
        tr = parse_trace(_read(args.trace, "trace"))
    except TraceError as e:
        raise StageError("trace", str(e)) from None
    f = _formula(args)
    value = satisfies(tr, f)
    if args.explain:
        sys.stdout.write(explain(tr, f))
    print("true" if value else "false")
    return EXIT_FOUND if value else EXIT_NONE


def cmd_simulate(args) -> int:
    try:
        net = parse_network(_read(args.model, "model"))
    except ModelError as e:
        raise StageError("model", str(e)) from None
    try:
        run = random_run(net, args.steps, args.seed)
    except DeadlockError as e:
        print(f"error [simulate]: {e}", file=sys.stderr)
        return EXIT_NONE
    maxima = net.clock_maxima()
    lasso = close_lasso(run, [maxima[x] for x in net.clocks])
    if lasso is None:
        print("error [simulate]: no repeated state with elapsed time; try more steps",
              file=sys.stderr)
        return EXIT_NONE
    names = sorted(net.props) if net.props else net.ap_names()
    text = run_to_trace(net, lasso, names).to_text()
    lines = [f"run: loop={lasso.loop}"]
    for i, s in enumerate(lasso.states):
        d = lasso.delays[i] if i < len(lasso.delays) else 0
        lines.append(f"s{i} delta={d} {s}")
    _write(args.output, text + "\n".join(lines) + "\n")
    return EXIT_FOUND


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mitlbmc", description="Bounded model checking of timed "
                                 "automata networks against metric temporal formulas.")
    sub = ap.add_subparsers(dest="command", required=True)

    def formula_opts(p):
        p.add_argument("--prop", help="formula text")
        p.add_argument("--prop-file", help="file holding the formula")

    c = sub.add_parser("check", help="search for a run satisfying a formula")
    c.add_argument("model")
    formula_opts(c)
    c.add_argument("--max-bound", type=int, default=50)
    c.add_argument("--solver", default=DEFAULT_SOLVER, help="SMT-LIB2 solver command")
    c.add_argument("--witness", help="write the witness trace here")
    c.add_argument("--verify", action="store_true",
                   help="search for a counterexample to the formula instead")
    c.add_argument("--stats", action="store_true")
    c.add_argument("--closure", choices=CLOSURES, default="exact")
    c.add_argument("--timeout", type=float, help="seconds per solver call")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("gen-fischer", help="print Fischer's protocol for N agents")
    g.add_argument("agents", type=int)
    g.add_argument("--delay", type=int, default=2)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen_fischer)

    e = sub.add_parser("eval-trace", help="evaluate a formula on a trace file")
    e.add_argument("trace")
    formula_opts(e)
    e.add_argument("--explain", action="store_true", help="print subformula truth per interval")
    e.set_defaults(func=cmd_eval_trace)

    s = sub.add_parser("simulate", help="write a random lasso run as a trace file")
    s.add_argument("model")
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_FOUND
    if getattr(args, "max_bound", 1) < 1:
        print("error [arguments]: --max-bound must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except StageError as e:
        print(e, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
