"""Bounded search for lasso-shaped runs of an encoded system.

States ``0..k`` are real; state ``k+1`` is a virtual copy that the loop
selector ties back to the chosen loop start ``j``. The transition from
``k`` to ``k+1`` is therefore the step that closes the lasso, and primed
variables at step ``k`` read the loop start.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .encoder import encode_formula, output_var
from .formula import Formula, atoms_of, rewrite_upper_until, subformula_order, to_pnf
from .regions import clock_maxima, completeness_bound, same_region_constraint
from .smt import (
    DEFAULT_SOLVER, Emitter, SolverError, SolverSession, bool_name, enum_name, exactly_one,
    named, rat, real_name, sym,
)
from .sts import DELTA, STS, StsState, eval_state, eval_step, translate_network
from .ta import Network
from .traces import Interval, SuperDenseTrace, TraceError, evaluate_at, holds_throughout

HEADER = ["(set-option :print-success false)", "(set-option :produce-models true)",
          "(set-logic QF_LRA)"]
CLOSURES = ("exact", "region")


class WitnessError(RuntimeError):
    pass


def loop_name(j: int) -> str:
    return f"!loop@{j}"


class Unroller:
    """Produces the constraint groups of the bounded encoding, bound by bound."""

    def __init__(self, sts: STS, goal: str | None = None, closure: str = "exact"):
        if closure not in CLOSURES:
            raise ValueError(f"unknown loop closure {closure!r}")
        self.sts = sts
        self.goal = goal
        self.closure = closure
        self.maxima = clock_maxima(sts)
        self.em = Emitter(sts)
        self._region = same_region_constraint(sts, self.maxima) if closure == "region" else None

    def delta(self, step: int) -> str:
        return sym(real_name(DELTA, step))

    def base(self) -> list[str]:
        out = ["; step 0"] + self.em.declare_step(0)
        init = f"(and {self.em.term(self.sts.init, 0, 0)} (= {self.delta(0)} 0.0))"
        out.append(named(init, "g0.init"))
        if self.goal is not None:
            out.append(named(sym(bool_name(self.goal, 0)), "g0.goal"))
        return out

    def extend(self, k: int) -> list[str]:
        out = [f"; step {k + 1}"] + self.em.declare_step(k + 1)
        out.append(named(self.em.term(self.sts.inv, k, k), f"g{k}.inv"))
        out.append(named(self.em.term(self.sts.trans, k, k + 1), f"g{k}.trans"))
        if k >= 1:
            alt = f"(=> (> {self.delta(k - 1)} 0.0) (= {self.delta(k)} 0.0))"
            out.append(named(alt, f"g{k}.alt"))
        return out

    def _closure(self, j: int, v: int) -> str:
        if self.closure == "region":
            return self.em.term(self._region, j, v)
        parts = [self.em.same(z, j, v) for z in self.sts.zvars]
        parts.append(f"(= {self.delta(v)} {self.delta(j)})")
        for x in self.sts.clocks:
            a, b = sym(real_name(x, j)), sym(real_name(x, v))
            m = rat(Fraction(self.maxima[x]))
            parts.append(f"(or (= {b} {a}) (and (> {b} {m}) (> {a} {m})))")
        return f"(and {' '.join(parts)})"

    def loop(self, k: int) -> list[str]:
        v = k + 1
        sel = [sym(loop_name(j)) for j in range(1, k + 1)]
        out = [f"; loop constraints for bound {k}"]
        out += [f"(declare-fun {s} () Bool)" for s in sel]
        out.append(named(exactly_one(sel), f"g{k}.loop"))
        for j in range(1, k + 1):
            out.append(named(f"(=> {sel[j - 1]} {self._closure(j, v)})", f"g{k}.closure{j}"))
            alt = f"(=> (and {sel[j - 1]} (> {self.delta(k)} 0.0)) (= {self.delta(j)} 0.0))"
            out.append(named(alt, f"g{k}.loopalt{j}"))
        in_loop = {m: f"(or {' '.join(sel[:m])})" if m > 1 else sel[0] for m in range(1, k + 1)}
        for i, f in enumerate(self.sts.fair):
            hits = [f"(and {in_loop[m]} {self.em.term(f, m, m)})" for m in range(1, k + 1)]
            body = hits[0] if len(hits) == 1 else f"(or {' '.join(hits)})"
            out.append(named(body, f"g{k}.fair{i}"))
        terms = [f"(ite {in_loop[m]} {self.delta(m)} 0.0)" for m in range(1, k + 1)]
        total = terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"
        out.append(named(f"(> {total} 0.0)", f"g{k}.nonzeno"))
        return out

    def model_names(self, k: int) -> list[str]:
        names = []
        for s in range(k + 2):
            names += self.em.step_names(s)
        return names + [loop_name(j) for j in range(1, k + 1)]


@dataclass
class BmcInstance:
    k: int
    unroller: Unroller

    @property
    def sts(self) -> STS:
        return self.unroller.sts


def unroll(sts: STS, k: int, goal: str | None = None, closure: str = "exact") -> BmcInstance:
    if k < 1:
        raise ValueError("bound must be at least 1")
    return BmcInstance(k, Unroller(sts, goal, closure))


def emit_smtlib(inst: BmcInstance) -> str:
    u = inst.unroller
    lines = list(HEADER) + u.base()
    for j in range(inst.k + 1):
        lines += u.extend(j)
    lines += u.loop(inst.k)
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# witnesses --------------------------------------------------------------------------------

@dataclass
class Witness:
    k: int
    states: list[StsState]
    deltas: list[Fraction]
    loop: int
    trace: SuperDenseTrace
    stats: dict = field(default_factory=dict)

    def run_text(self, hide_prefix: str = "enc!") -> str:
        lines = [f"run: loop={self.loop}"]
        for i, (s, d) in enumerate(zip(self.states, self.deltas)):
            z = " ".join(f"{k}={_fmt(v)}" for k, v in s.z.items() if not k.startswith(hide_prefix))
            x = " ".join(f"{k}={v}" for k, v in s.x.items() if not k.startswith(hide_prefix))
            lines.append(f"s{i} delta={d} {z} {x}".rstrip())
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        return self.trace.to_text() + self.run_text()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def extract_witness(model: dict, inst: BmcInstance, names: Sequence[str]) -> Witness:
    sts, k = inst.sts, inst.k
    try:
        loops = [j for j in range(1, k + 1) if model[loop_name(j)]]
        states, deltas = [], []
        for s in range(k + 2):
            z: dict[str, object] = {}
            for var, dom in sts.zvars.items():
                if dom is None:
                    z[var] = bool(model[bool_name(var, s)])
                else:
                    hot = [v for v in dom if model[enum_name(var, v, s)]]
                    if len(hot) != 1:
                        raise WitnessError(f"{var} at step {s} is not one-hot")
                    z[var] = hot[0]
            x = {c: Fraction(model[real_name(c, s)]) for c in sts.clocks}
            states.append(StsState(z, x))
            deltas.append(Fraction(model[real_name(DELTA, s)]))
    except KeyError as e:
        raise WitnessError(f"model lacks a value for {e.args[0]}") from None
    if len(loops) != 1:
        raise WitnessError(f"expected exactly one loop start, got {loops}")
    j = loops[0]
    ts = [Fraction(0)]
    for d in deltas[: k + 1]:
        ts.append(ts[-1] + d)
    entries = []
    for i in range(k + 1):
        props = frozenset(n for n in names if _ap(sts, n, states[i]))
        iv = Interval.point(ts[i]) if deltas[i] == 0 else Interval.open(ts[i], ts[i] + deltas[i])
        entries.append((iv, props))
    try:
        trace = SuperDenseTrace(tuple(entries[:j]), tuple(entries[j:]), ts[k + 1] - ts[j])
    except TraceError as e:
        raise WitnessError(f"decoded lasso is not a trace: {e}") from None
    return Witness(k, states, deltas, j, trace)


def _ap(sts: STS, name: str, s: StsState) -> bool:
    from .sts import evaluate
    return evaluate(sts.ap[name], s)


def witness_problems(w: Witness, f: Formula, sts: STS) -> list[str]:
    """Empty when the witness is a genuine run satisfying ``f``.

    ``sts`` must be the encoded system for ``f``; every true output
    variable is checked against the trace.
    """
    problems = []
    if not evaluate_at(w.trace, f):
        problems.append("trace does not satisfy the formula at <0,0>")
    if not eval_state(sts, "I", w.states[0]):
        problems.append("state 0 is not initial")
    for i in range(w.k + 1):
        if not eval_state(sts, "INV", w.states[i]):
            problems.append(f"state {i} violates the invariant")
        if not eval_step(sts, w.states[i], w.deltas[i], w.states[i + 1]):
            problems.append(f"step {i} violates the transition relation")
    table = subformula_order(f)
    for idx, g in enumerate(table):
        var = output_var(idx)
        if var not in sts.zvars:
            continue
        for i in range(w.k + 1):
            if w.states[i].z[var] and not holds_throughout(w.trace, g, i):
                problems.append(f"output of {g} is true in state {i} but fails there")
    return problems


def validate_witness(w: Witness, f: Formula, sts: STS) -> bool:
    return not witness_problems(w, f, sts)


# search -------------------------------------------------------------------------------------

@dataclass
class Verdict:
    status: str  # "witness", "no-trace" or "unknown"
    bound: int
    witness: Witness | None = None
    stats: dict = field(default_factory=dict)


def _goal_name(sts: STS, f: Formula | None) -> str | None:
    if f is None:
        return None
    return output_var(len(subformula_order(f)) - 1)


def solve_incremental(sts: STS, max_bound: int, f: Formula | None = None,
                      solver: str = DEFAULT_SOLVER, names: Sequence[str] | None = None,
                      closure: str = "exact", min_bound: int = 1, timeout: float | None = None,
                      session: SolverSession | None = None) -> Verdict:
    """Search bounds ``min_bound..max_bound``; ``f`` is the formula ``sts`` encodes."""
    if names is None:
        names = sorted(sts.ap)
    u = Unroller(sts, _goal_name(sts, f), closure)
    stats = {"bounds": [], "completeness_bound": completeness_bound(sts, u.maxima)}
    own = session is None
    sess = session or SolverSession(solver, timeout)
    t_start = time.monotonic()
    try:
        sess.send(*u.base())
        sess.send(*u.extend(0))
        for k in range(1, max_bound + 1):
            sess.send(*u.extend(k))
            if k < min_bound:
                continue
            sess.push()
            sess.send(*u.loop(k))
            t0 = time.monotonic()
            res = sess.check()
            stats["bounds"].append((k, res, round(time.monotonic() - t0, 4)))
            if res == "unknown":
                stats["time"] = time.monotonic() - t_start
                return Verdict("unknown", k, None, stats)
            if res == "sat":
                model = sess.get_values(u.model_names(k))
                w = extract_witness(model, BmcInstance(k, u), names)
                if f is not None:
                    problems = witness_problems(w, f, sts)
                    if problems:
                        raise WitnessError("witness failed validation:\n  " + "\n  ".join(problems)
                                           + "\n" + w.to_text())
                stats["time"] = time.monotonic() - t_start
                w.stats = dict(stats)
                return Verdict("witness", k, w, stats)
            sess.pop()
        stats["time"] = time.monotonic() - t_start
        return Verdict("no-trace", max_bound, None, stats)
    finally:
        stats["checks"] = sess.stats.checks
        stats["solve_time"] = round(sess.stats.solve_time, 4)
        if own:
            sess.close()


def solve_at(sts: STS, k: int, f: Formula | None = None, solver: str = DEFAULT_SOLVER,
             closure: str = "exact") -> str:
    """One-shot check of a single bound in a fresh session."""
    inst = unroll(sts, k, _goal_name(sts, f), closure)
    with SolverSession(solver) as sess:
        text = emit_smtlib(inst)
        sess.send(*[l for l in text.splitlines() if l and l not in HEADER and l != "(check-sat)"])
        return sess.check()


# pipeline ---------------------------------------------------------------------------------

@dataclass
class Prepared:
    formula: Formula
    sts: STS
    base: STS
    names: list[str]


def prepare(net: Network, f: Formula) -> Prepared:
    """PNF, rewrite, translate and encode. ``f`` may contain negations."""
    g = rewrite_upper_until(to_pnf(f))
    atoms = sorted(atoms_of(g))
    ap_names = list(net.ap_names())
    for a in atoms:
        if a not in ap_names:
            net.resolve_ap(a)
            ap_names.append(a)
    base = translate_network(net, ap_names)
    sts = encode_formula(base, g)
    shown = sorted(set(atoms) | {n for n in net.props})
    return Prepared(g, sts, base, shown)


def check_network(net: Network, f: Formula, max_bound: int = 50, solver: str = DEFAULT_SOLVER,
                  closure: str = "exact", timeout: float | None = None) -> Verdict:
    p = prepare(net, f)
    return solve_incremental(p.sts, max_bound, p.formula, solver, p.names, closure,
                             timeout=timeout)
