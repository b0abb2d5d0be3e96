"""Networks of timed automata with shared bounded integer variables.

Components interleave: a discrete step fires one edge of one component,
a time elapse step advances every clock. Components talk only through the
shared variables.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .traces import Interval, SuperDenseTrace, TraceError


class ModelError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.col = col


class DeadlockError(RuntimeError):
    def __init__(self, state: "NetState", steps: int):
        super().__init__(f"deadlock after {steps} steps in {state}")
        self.state = state
        self.steps = steps


class Cmp(Enum):
    LT = "<"
    LE = "<="
    EQ = "=="
    NE = "!="
    GE = ">="
    GT = ">"

    def holds(self, a, b) -> bool:
        return {
            Cmp.LT: a < b, Cmp.LE: a <= b, Cmp.EQ: a == b,
            Cmp.NE: a != b, Cmp.GE: a >= b, Cmp.GT: a > b,
        }[self]


@dataclass(frozen=True)
class ClockAtom:
    clock: str
    op: Cmp
    bound: int

    def __str__(self):
        return f"{self.clock}{self.op.value}{self.bound}"


@dataclass(frozen=True)
class VarTest:
    var: str
    op: Cmp
    value: int

    def __str__(self):
        return f"{self.var}{self.op.value}{self.value}"


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    clock_guard: tuple[ClockAtom, ...] = ()
    var_guard: tuple[VarTest, ...] = ()
    updates: tuple[tuple[str, int], ...] = ()
    resets: tuple[str, ...] = ()


@dataclass
class TimedAutomaton:
    name: str
    locations: tuple[str, ...]
    init: str
    edges: tuple[Edge, ...] = ()
    invariants: dict[str, tuple[ClockAtom, ...]] = field(default_factory=dict)

    def invariant(self, loc: str) -> tuple[ClockAtom, ...]:
        return self.invariants.get(loc, ())

    @property
    def clocks(self) -> set[str]:
        used = {a.clock for inv in self.invariants.values() for a in inv}
        for e in self.edges:
            used.update(a.clock for a in e.clock_guard)
            used.update(e.resets)
        return used


@dataclass(frozen=True)
class VarDecl:
    name: str
    upper: int
    init: int = 0

    @property
    def domain(self) -> tuple[int, ...]:
        return tuple(range(self.upper + 1))


# proposition expressions ---------------------------------------------------

@dataclass(frozen=True)
class PConst:
    value: bool


@dataclass(frozen=True)
class PLoc:
    automaton: str
    loc: str


@dataclass(frozen=True)
class PVar:
    var: str
    op: Cmp
    value: int


@dataclass(frozen=True)
class PNot:
    arg: object


@dataclass(frozen=True)
class PAnd:
    args: tuple


@dataclass(frozen=True)
class POr:
    args: tuple


@dataclass
class Network:
    clocks: tuple[str, ...]
    variables: tuple[VarDecl, ...]
    automata: tuple[TimedAutomaton, ...]
    props: dict[str, object] = field(default_factory=dict)

    def automaton(self, name: str) -> TimedAutomaton:
        for a in self.automata:
            if a.name == name:
                return a
        raise KeyError(name)

    def var(self, name: str) -> VarDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def constants(self) -> set[int]:
        out = set()
        for a in self.automata:
            for inv in a.invariants.values():
                out.update(c.bound for c in inv)
            for e in a.edges:
                out.update(c.bound for c in e.clock_guard)
        return out

    def clock_maxima(self) -> dict[str, int]:
        out = {x: 0 for x in self.clocks}
        for a in self.automata:
            atoms = [c for inv in a.invariants.values() for c in inv]
            atoms += [c for e in a.edges for c in e.clock_guard]
            for c in atoms:
                out[c.clock] = max(out[c.clock], c.bound)
        return out

    def ap_names(self) -> list[str]:
        names = [f"@{a.name}.{l}" for a in self.automata for l in a.locations]
        names += [f"@{v.name}={k}" for v in self.variables for k in v.domain]
        return names + sorted(self.props)

    def resolve_ap(self, name: str):
        if name in self.props:
            return self.props[name]
        if not name.startswith("@"):
            raise ModelError(f"unknown proposition {name!r}")
        body = name[1:]
        if "=" in body:
            var, _, val = body.partition("=")
            try:
                decl = self.var(var)
            except KeyError:
                raise ModelError(f"unknown variable in proposition {name!r}") from None
            if not val.isdigit() or int(val) > decl.upper:
                raise ModelError(f"value out of range in proposition {name!r}")
            return PVar(var, Cmp.EQ, int(val))
        if "." in body:
            auto, _, loc = body.partition(".")
            try:
                a = self.automaton(auto)
            except KeyError:
                raise ModelError(f"unknown automaton in proposition {name!r}") from None
            if loc not in a.locations:
                raise ModelError(f"unknown location in proposition {name!r}")
            return PLoc(auto, loc)
        owners = [a for a in self.automata if body in a.locations]
        if len(owners) != 1:
            raise ModelError(f"location {body!r} is unknown or ambiguous")
        return PLoc(owners[0].name, body)


# states and runs ---------------------------------------------------------------

@dataclass(frozen=True)
class NetState:
    locs: tuple[str, ...]
    vals: tuple[int, ...]
    clocks: tuple[Fraction, ...]

    def discrete(self):
        return self.locs, self.vals

    def __str__(self):
        cl = ",".join(str(c) for c in self.clocks)
        vs = ",".join(str(v) for v in self.vals)
        return f"<{','.join(self.locs)} | {vs} | {cl}>"


@dataclass
class Run:
    """States and step durations; ``delays[i]`` leads from state i to i+1.

    With ``loop`` set, the last state stands for ``states[loop]`` and the
    segment between them repeats forever.
    """
    states: list[NetState]
    delays: list[Fraction]
    loop: int | None = None

    def times(self) -> list[Fraction]:
        ts = [Fraction(0)]
        for d in self.delays:
            ts.append(ts[-1] + d)
        return ts


def initial_state(net: Network) -> NetState:
    return NetState(
        tuple(a.init for a in net.automata),
        tuple(v.init for v in net.variables),
        tuple(Fraction(0) for _ in net.clocks),
    )


def _clock_env(net: Network, s: NetState) -> dict[str, Fraction]:
    return dict(zip(net.clocks, s.clocks))


def _var_env(net: Network, s: NetState) -> dict[str, int]:
    return {v.name: x for v, x in zip(net.variables, s.vals)}


def clock_ok(atoms: Iterable[ClockAtom], env) -> bool:
    return all(a.op.holds(env[a.clock], a.bound) for a in atoms)


def is_valid(net: Network, s: NetState) -> bool:
    env = _clock_env(net, s)
    return all(clock_ok(a.invariant(l), env) for a, l in zip(net.automata, s.locs))


def eval_prop(net: Network, expr, s: NetState) -> bool:
    if isinstance(expr, PConst):
        return expr.value
    if isinstance(expr, PLoc):
        idx = [a.name for a in net.automata].index(expr.automaton)
        return s.locs[idx] == expr.loc
    if isinstance(expr, PVar):
        return expr.op.holds(_var_env(net, s)[expr.var], expr.value)
    if isinstance(expr, PNot):
        return not eval_prop(net, expr.arg, s)
    if isinstance(expr, PAnd):
        return all(eval_prop(net, a, s) for a in expr.args)
    if isinstance(expr, POr):
        return any(eval_prop(net, a, s) for a in expr.args)
    raise TypeError(expr)


def props_of(net: Network, s: NetState, names: Iterable[str]) -> frozenset[str]:
    return frozenset(n for n in names if eval_prop(net, net.resolve_ap(n), s))


def enabled_edges(net: Network, s: NetState) -> list[tuple[int, Edge]]:
    cenv, venv = _clock_env(net, s), _var_env(net, s)
    out = []
    for i, a in enumerate(net.automata):
        for e in a.edges:
            if e.src != s.locs[i]:
                continue
            if not clock_ok(e.clock_guard, cenv):
                continue
            if not all(t.op.holds(venv[t.var], t.value) for t in e.var_guard):
                continue
            nxt = fire(net, s, i, e)
            if is_valid(net, nxt):
                out.append((i, e))
    return out


def fire(net: Network, s: NetState, index: int, e: Edge) -> NetState:
    locs = list(s.locs)
    locs[index] = e.dst
    upd = dict(e.updates)
    vals = tuple(upd.get(v.name, x) for v, x in zip(net.variables, s.vals))
    clocks = tuple(Fraction(0) if c in e.resets else x for c, x in zip(net.clocks, s.clocks))
    return NetState(tuple(locs), vals, clocks)


def elapse(s: NetState, d: Fraction) -> NetState:
    return replace(s, clocks=tuple(x + d for x in s.clocks))


def is_step(net: Network, s: NetState, d: Fraction, t: NetState) -> bool:
    """Direct reading of the elapse and discrete step rules."""
    if d < 0 or not is_valid(net, t):
        return False
    if d > 0:
        return t == elapse(s, d)
    return any(fire(net, s, i, e) == t for i, e in enabled_edges(net, s))


def check_run(net: Network, run: Run) -> list[str]:
    problems = []
    if len(run.delays) != len(run.states) - 1:
        problems.append("delay count does not match state count")
        return problems
    if run.states[0] != initial_state(net) or not is_valid(net, run.states[0]):
        problems.append("first state is not the initial state")
    for i, d in enumerate(run.delays):
        if not is_step(net, run.states[i], d, run.states[i + 1]):
            problems.append(f"step {i} is not a legal step")
        if i and d > 0 and run.delays[i - 1] > 0 and enabled_edges(net, run.states[i]):
            problems.append(f"steps {i - 1} and {i} are both time elapse steps")
    if run.loop is not None:
        j = run.loop
        if not 0 <= j < len(run.states) - 1:
            problems.append("loop index out of range")
        elif run.states[j].discrete() != run.states[-1].discrete():
            problems.append("loop does not return to the same discrete state")
    return problems


# simulation -----------------------------------------------------------------

HALF = Fraction(1, 2)


def candidate_delays(net: Network, s: NetState) -> list[Fraction]:
    consts = sorted(net.constants())
    cands = {HALF, Fraction(1)}
    for v in s.clocks:
        for c in consts:
            for e in (0, HALF, -HALF):
                d = c - v + e
                if d > 0:
                    cands.add(d)
    return sorted(cands)


def random_run(net: Network, n_steps: int, seed: int) -> Run:
    """Sample a legal run prefix with ``n_steps`` steps.

    Each step picks uniformly among the enabled edges and one extra option
    for a delay that keeps the invariants. Two delays follow each other only
    when no edge is enabled in between, which the trace view treats as one
    split open interval.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    rng = random.Random(seed)
    s = initial_state(net)
    if not is_valid(net, s):
        raise DeadlockError(s, 0)
    states, delays = [s], []
    while len(delays) < n_steps:
        edges = enabled_edges(net, s)
        options: list = list(edges)
        if not delays or delays[-1] == 0 or not edges:
            ds = [d for d in candidate_delays(net, s) if is_valid(net, elapse(s, d))]
            if ds:
                options.append(ds)
        if not options:
            raise DeadlockError(s, len(delays))
        pick = rng.choice(options)
        if isinstance(pick, list):
            d = rng.choice(pick)
            s = elapse(s, d)
        else:
            d = Fraction(0)
            s = fire(net, s, *pick)
        states.append(s)
        delays.append(d)
    return Run(states, delays)


def close_lasso(run: Run, maxima: Sequence[int] | None = None) -> Run | None:
    """Cut a finite run at the latest repetition that took time.

    With ``maxima`` (one per clock) a clock above its maximum in both states
    counts as equal; otherwise repetitions must be exact.
    """
    def same(a: NetState, b: NetState) -> bool:
        if maxima is None or a.discrete() != b.discrete():
            return a == b
        return all(x == y or (x > m and y > m) for x, y, m in zip(a.clocks, b.clocks, maxima))

    ts = run.times()
    for m in range(len(run.states) - 1, 0, -1):
        for j in range(m):
            if same(run.states[j], run.states[m]) and ts[m] > ts[j]:
                return Run(run.states[: m + 1], run.delays[:m], j)
    return None


# runs as traces -------------------------------------------------------------------

def run_intervals(net: Network, run: Run, names: Sequence[str]) -> list[tuple[Interval, frozenset]]:
    ts = run.times()
    out = []
    for i, s in enumerate(run.states):
        props = props_of(net, s, names)
        out.append((Interval.point(ts[i]), props))
        if i < len(run.delays) and run.delays[i] > 0:
            out.append((Interval.open(ts[i], ts[i + 1]), props))
    return out


def run_to_trace(net: Network, run: Run, names: Sequence[str] | None = None) -> SuperDenseTrace:
    if run.loop is None:
        raise TraceError("run has no loop")
    if names is None:
        names = net.ap_names()
    ts = run.times()
    j = run.loop
    shift = ts[-1] - ts[j]
    if shift <= 0:
        raise TraceError("loop takes no time")
    body = Run(run.states[:-1], run.delays, None)
    ivs = run_intervals(net, body, names)
    # the last open interval runs up to the (identified) final state
    cut = sum(2 if d > 0 else 1 for d in run.delays[:j])
    return SuperDenseTrace(tuple(ivs[:cut]), tuple(ivs[cut:]), shift)


# model text ---------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|\#[^\n]*|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>-?\d+(?:\.\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|<=|>=|==|!=|\.\.|[<>=&|!(){};,:.])
""", re.VERBOSE)

_CMP = {"<": Cmp.LT, "<=": Cmp.LE, "=": Cmp.EQ, "==": Cmp.EQ, "!=": Cmp.NE,
        ">=": Cmp.GE, ">": Cmp.GT}

KEYWORDS = {"clock", "var", "automaton", "prop", "init", "loc", "inv", "edge",
            "when", "do", "reset", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    toks, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ModelError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - start + 1))
    return toks


class _ModelParser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0
        self.clocks: list[str] = []
        self.vars: dict[str, VarDecl] = {}
        self.autos: list[TimedAutomaton] = []
        self.props: dict[str, object] = {}

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ModelError(msg, tok.line, tok.col)

    def take(self, text: str | None = None) -> _Tok:
        tok = self.peek()
        if text is not None and tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.peek().text == text:
            self.i += 1
            return True
        return False

    def ident(self) -> _Tok:
        tok = self.peek()
        if tok.kind != "id" or tok.text in KEYWORDS:
            self.fail(f"expected a name, found {tok.text or 'end of input'!r}")
        return self.take()

    def natural(self) -> int:
        tok = self.peek()
        if tok.kind != "num":
            self.fail(f"expected a number, found {tok.text or 'end of input'!r}")
        if not tok.text.isdigit():
            self.fail(f"constant {tok.text} is not a natural number")
        self.take()
        return int(tok.text)

    def declared(self, tok: _Tok):
        if tok.text in self.clocks or tok.text in self.vars or tok.text in self.props \
                or any(a.name == tok.text for a in self.autos):
            self.fail(f"{tok.text!r} declared twice", tok)

    def parse(self) -> Network:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text == "clock":
                self.clock_decl()
            elif tok.text == "var":
                self.var_decl()
            elif tok.text == "automaton":
                self.automaton()
            elif tok.text == "prop":
                self.prop_decl()
            else:
                self.fail(f"unexpected {tok.text!r}")
        if not self.autos:
            raise ModelError("model has no automaton")
        owner: dict[str, str] = {}
        for a in self.autos:
            for c in sorted(a.clocks):
                if c in owner:
                    raise ModelError(f"clock {c!r} used by both {owner[c]} and {a.name}")
                owner[c] = a.name
        return Network(tuple(self.clocks), tuple(self.vars.values()), tuple(self.autos), self.props)

    def clock_decl(self):
        self.take("clock")
        while True:
            tok = self.ident()
            self.declared(tok)
            self.clocks.append(tok.text)
            if not self.accept(","):
                break
        self.take(";")

    def var_decl(self):
        self.take("var")
        tok = self.ident()
        self.declared(tok)
        self.take(":")
        lo_tok = self.peek()
        lo = self.natural()
        if lo != 0:
            self.fail("variable ranges must start at 0", lo_tok)
        self.take("..")
        hi = self.natural()
        init = 0
        if self.accept("="):
            init_tok = self.peek()
            init = self.natural()
            if init > hi:
                self.fail("initial value out of range", init_tok)
        self.take(";")
        self.vars[tok.text] = VarDecl(tok.text, hi, init)

    def clock_atom(self) -> ClockAtom:
        tok = self.ident()
        if tok.text not in self.clocks:
            self.fail(f"undeclared clock {tok.text!r}", tok)
        op = self.cmp(clock=True)
        return ClockAtom(tok.text, op, self.natural())

    def cmp(self, clock: bool) -> Cmp:
        tok = self.take()
        if tok.text not in _CMP or (clock and tok.text == "!="):
            self.fail(f"expected a comparison, found {tok.text!r}", tok)
        return _CMP[tok.text]

    def clock_conj(self) -> tuple[ClockAtom, ...]:
        if self.accept("true"):
            return ()
        atoms = [self.clock_atom()]
        while self.accept("&"):
            atoms.append(self.clock_atom())
        return tuple(atoms)

    def guard(self) -> tuple[tuple[ClockAtom, ...], tuple[VarTest, ...]]:
        clocks, tests = [], []
        while True:
            if not self.accept("true"):
                tok = self.ident()
                if tok.text in self.clocks:
                    clocks.append(ClockAtom(tok.text, self.cmp(clock=True), self.natural()))
                elif tok.text in self.vars:
                    op = self.cmp(clock=False)
                    tests.append(VarTest(tok.text, op, self.natural()))
                else:
                    self.fail(f"undeclared identifier {tok.text!r}", tok)
            if not self.accept("&"):
                return tuple(clocks), tuple(tests)

    def automaton(self):
        self.take("automaton")
        name = self.ident()
        self.declared(name)
        self.take("{")
        init = None
        locs: list[str] = []
        invs: dict[str, tuple[ClockAtom, ...]] = {}
        pending_invs: list[tuple[_Tok, tuple[ClockAtom, ...]]] = []
        edges: list[tuple[_Tok, _Tok, Edge]] = []
        while not self.accept("}"):
            tok = self.peek()
            if tok.text == "init":
                self.take()
                init = self.ident()
                self.take(";")
            elif tok.text == "loc":
                self.take()
                l = self.ident()
                if l.text in locs:
                    self.fail(f"location {l.text!r} declared twice", l)
                locs.append(l.text)
                if self.accept("inv"):
                    invs[l.text] = self.clock_conj()
                self.take(";")
            elif tok.text == "inv":
                self.take()
                l = self.ident()
                self.take(":")
                pending_invs.append((l, self.clock_conj()))
                self.take(";")
            elif tok.text == "edge":
                edges.append(self.edge())
            elif tok.kind == "eof":
                self.fail(f"automaton {name.text} is not closed")
            else:
                self.fail(f"unexpected {tok.text!r} in automaton")
        if init is None:
            self.fail(f"automaton {name.text} has no initial location", name)
        for l in [init] + [t for t, _ in pending_invs] + [t for s, d, _ in edges for t in (s, d)]:
            if l.text not in locs:
                self.fail(f"unknown location {l.text!r}", l)
        for l, inv in pending_invs:
            invs[l.text] = invs.get(l.text, ()) + inv
        self.autos.append(TimedAutomaton(name.text, tuple(locs), init.text,
                                         tuple(e for _, _, e in edges), invs))

    def edge(self):
        self.take("edge")
        src = self.ident()
        self.take("->")
        dst = self.ident()
        clocks, tests, updates, resets = (), (), [], []
        if self.accept("when"):
            clocks, tests = self.guard()
        if self.accept("do"):
            while True:
                v = self.ident()
                if v.text not in self.vars:
                    self.fail(f"undeclared variable {v.text!r}", v)
                self.take(":=")
                val_tok = self.peek()
                val = self.natural()
                if val > self.vars[v.text].upper:
                    self.fail(f"value {val} out of range for {v.text}", val_tok)
                updates.append((v.text, val))
                if not self.accept(","):
                    break
        if self.accept("reset"):
            while True:
                c = self.ident()
                if c.text not in self.clocks:
                    self.fail(f"undeclared clock {c.text!r}", c)
                resets.append(c.text)
                if not self.accept(","):
                    break
        self.take(";")
        return src, dst, Edge(src.text, dst.text, clocks, tests, tuple(updates), tuple(resets))

    def prop_decl(self):
        self.take("prop")
        name = self.ident()
        self.declared(name)
        self.take(":=")
        self.props[name.text] = self.p_or()
        self.take(";")

    def p_or(self):
        args = [self.p_and()]
        while self.accept("|"):
            args.append(self.p_and())
        return args[0] if len(args) == 1 else POr(tuple(args))

    def p_and(self):
        args = [self.p_unary()]
        while self.accept("&"):
            args.append(self.p_unary())
        return args[0] if len(args) == 1 else PAnd(tuple(args))

    def p_unary(self):
        if self.accept("!"):
            return PNot(self.p_unary())
        if self.accept("("):
            e = self.p_or()
            self.take(")")
            return e
        if self.accept("true"):
            return PConst(True)
        if self.accept("false"):
            return PConst(False)
        tok = self.ident()
        if self.accept("."):
            loc = self.ident()
            autos = {a.name: a for a in self.autos}
            if tok.text not in autos:
                self.fail(f"undeclared automaton {tok.text!r}", tok)
            if loc.text not in autos[tok.text].locations:
                self.fail(f"unknown location {loc.text!r}", loc)
            return PLoc(tok.text, loc.text)
        if tok.text in self.vars:
            op = self.cmp(clock=False)
            return PVar(tok.text, op, self.natural())
        if tok.text in self.props:
            return self.props[tok.text]
        self.fail(f"undeclared identifier {tok.text!r}", tok)


def parse_network(text: str) -> Network:
    return _ModelParser(text).parse()


def fischer_model(n: int, k: int = 2) -> str:
    """Fischer's timed mutual exclusion protocol for ``n`` agents."""
    if n < 2:
        raise ValueError("Fischer needs at least two agents")
    if k < 1:
        raise ValueError("delay constant must be at least 1")
    lines = [f"# Fischer mutual exclusion, {n} agents, delay {k}",
             "clock " + ", ".join(f"x{i}" for i in range(1, n + 1)) + ";",
             f"var id : 0..{n} = 0;", ""]
    for i in range(1, n + 1):
        x = f"x{i}"
        lines += [
            f"automaton P{i} {{",
            "  init idle;",
            "  loc idle;",
            f"  loc req inv {x}<={k};",
            "  loc wait;",
            "  loc cs;",
            f"  edge idle -> req when id==0 reset {x};",
            f"  edge req -> wait do id:={i} reset {x};",
            f"  edge wait -> cs when {x}>{k} & id=={i};",
            f"  edge wait -> req when id==0 reset {x};",
            "  edge cs -> idle do id:=0;",
            "}", "",
        ]
    lines.append("prop crit := " + " | ".join(f"P{i}.cs" for i in range(1, n + 1)) + ";")
    lines.append("prop crit1 := P1.cs;")
    lines.append("prop idle := P1.idle;")
    lines.append("prop reqP := P1.req;")
    lines.append("prop waitP := P1.wait;")
    pairs = [f"(P{i}.cs & P{j}.cs)" for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    lines.append("prop crit2way := " + " | ".join(pairs) + ";")
    return "\n".join(lines) + "\n"
