"""Shared generators and a brute-force evaluator for cross-checking."""
from __future__ import annotations

import math
import random
from fractions import Fraction as Q

from mitlbmc.formula import (
    FALSE, TRUE, Always, And, Eventually, Formula, Not, Op, Or, Rel, Release, Until, atom,
    iter_nodes, subformula_order,
)
from mitlbmc.traces import Interval, SuperDenseTrace

DURATIONS = [Q(1, 2), Q(1), Q(3, 2), Q(2), Q(3)]


def random_props(rng: random.Random, names=("p", "q", "r")):
    return frozenset(n for n in names if rng.random() < 0.5)


def random_trace(rng: random.Random, max_prefix=4, max_loop=4, names=("p", "q", "r"),
                 durations=DURATIONS) -> SuperDenseTrace:
    prefix = [(Interval.point(0), random_props(rng, names))]
    t = Q(0)
    for _ in range(rng.randint(0, max_prefix)):
        last = prefix[-1][0]
        if last.is_singleton and rng.random() < 0.6:
            d = rng.choice(durations)
            prefix.append((Interval.open(t, t + d), random_props(rng, names)))
            t += d
        prefix.append((Interval.point(t), random_props(rng, names)))
    if not prefix[-1][0].is_singleton:
        prefix.append((Interval.point(t), random_props(rng, names)))
    start = t
    loop = [(Interval.point(t), random_props(rng, names))]
    for _ in range(rng.randint(0, max_loop - 1)):
        if rng.random() < 0.3:
            loop.append((Interval.point(t), random_props(rng, names)))
        else:
            d = rng.choice(durations)
            loop.append((Interval.open(t, t + d), random_props(rng, names)))
            t += d
            loop.append((Interval.point(t), random_props(rng, names)))
    d = rng.choice(durations)
    loop.append((Interval.open(t, t + d), random_props(rng, names)))
    t += d
    return SuperDenseTrace(tuple(prefix), tuple(loop), t - start)


def random_formula(rng: random.Random, depth: int, names=("p", "q", "r"), max_n=3,
                   negation=True, temporal_budget=None) -> Formula:
    def gen(d: int) -> Formula:
        if d == 0 or rng.random() < 0.25:
            r = rng.random()
            if r < 0.05:
                return TRUE
            if r < 0.1:
                return FALSE
            return atom(rng.choice(names))
        kind = rng.choice(["not", "and", "or", "U", "R", "F", "G"] if negation
                          else ["and", "or", "U", "R", "F", "G"])
        rel = rng.choice(list(Rel))
        n = rng.randint(0, max_n)
        if rng.random() < 0.3:
            rel, n = Rel.GE, 0
        if kind == "not":
            return Not(gen(d - 1))
        if kind == "and":
            return And(gen(d - 1), gen(d - 1))
        if kind == "or":
            return Or(gen(d - 1), gen(d - 1))
        if kind == "U":
            return Until(gen(d - 1), gen(d - 1), rel, n)
        if kind == "R":
            return Release(gen(d - 1), gen(d - 1), rel, n)
        if kind == "F":
            return Eventually(gen(d - 1), rel, n)
        return Always(gen(d - 1), rel, n)
    return gen(depth)


def temporal_depth(f: Formula) -> int:
    inner = max((temporal_depth(a) for a in f.args), default=0)
    return inner + (1 if f.is_temporal else 0)


class BruteForce:
    """Direct reading of the satisfaction clauses over a rational lattice.

    All interval endpoints lie on the lattice (1/L)Z and all bounds are
    integers, so every subformula is constant on the open cells of that
    lattice. Truth is stored at the half-lattice points, and witnesses are
    searched on the quarter lattice.
    """

    def __init__(self, trace: SuperDenseTrace, f: Formula, horizon: Q):
        self.f = f
        ends = [iv.lo for iv, _ in trace.entries] + [iv.hi for iv, _ in trace.entries] + [trace.shift]
        L = 1
        for e in ends:
            L = L * e.denominator // math.gcd(L, e.denominator)
        self.L = L
        ivs = []
        k = 0
        while True:
            iv, props = trace.at(k)
            if iv.lo > horizon:
                break
            ivs.append((iv, props))
            k += 1
        self.ivs = ivs
        # quarter-lattice witness points, interleaved with the open gaps
        # between them; a gap is represented by its midpoint
        self.points: list[tuple[int, Q]] = []
        self.tokens: list[tuple[bool, tuple[int, Q]]] = []
        self.token_of: dict[int, int] = {}
        step = Q(1, 4 * L)
        for i, (iv, _) in enumerate(ivs):
            if iv.is_singleton:
                self._add_point((i, iv.lo))
                continue
            prev = iv.lo
            t = iv.lo + step
            while t < iv.hi:
                self.tokens.append((False, (i, (prev + t) / 2)))
                self._add_point((i, t))
                prev = t
                t += step
            self.tokens.append((False, (i, (prev + iv.hi) / 2)))
        self.order = {pt: k for k, pt in enumerate(self.points)}
        self.vals: dict[Formula, list[bool]] = {}
        for g in subformula_order(f):
            self.vals[g] = self._eval(g)

    def _add_point(self, pt):
        self.token_of[len(self.points)] = len(self.tokens)
        self.tokens.append((True, pt))
        self.points.append(pt)

    def _rep(self, pt):
        i, t = pt
        iv = self.ivs[i][0]
        if iv.is_singleton or (t * self.L).denominator == 1:
            return pt
        c = Q(math.floor(t * self.L), self.L)
        return (i, c + Q(1, 2 * self.L))

    def value(self, g: Formula, pt) -> bool:
        return self.vals[g][self.order[self._rep(pt)]]

    def _eval(self, g: Formula) -> list[bool]:
        pts = self.points
        out = []
        for k, (i, t) in enumerate(pts):
            if self._rep((i, t)) != (i, t):
                out.append(None)
                continue
            out.append(self._at(g, k))
        # fill quarter points from their representative
        for k, pt in enumerate(pts):
            if out[k] is None:
                out[k] = out[self.order[self._rep(pt)]]
        return out

    def _at(self, g: Formula, k: int) -> bool:
        i, t = self.points[k]
        op = g.op
        if op is Op.TRUE:
            return True
        if op is Op.FALSE:
            return False
        if op is Op.ATOM:
            return g.name in self.ivs[i][1]
        if op is Op.NEG_ATOM:
            return g.name not in self.ivs[i][1]
        if op is Op.NOT:
            return not self.vals[g.args[0]][k]
        if op is Op.AND:
            return self.vals[g.args[0]][k] and self.vals[g.args[1]][k]
        if op is Op.OR:
            return self.vals[g.args[0]][k] or self.vals[g.args[1]][k]
        until = op in (Op.UNTIL, Op.EVENTUALLY)
        binary = op in (Op.UNTIL, Op.RELEASE)
        for is_point, pt in self.tokens[self.token_of[k] + 1:]:
            phi = self.value(g.args[0], pt) if binary else until
            if is_point:
                psi = self.value(g.args[-1], pt)
                if g.rel.holds(pt[1] - t, g.bound) and psi == until:
                    return until
            if phi != until:
                return not until
        return not until

    def holds_at(self, i: int, t: Q) -> bool:
        return self.value(self.f, (i, t))


def horizon_for(trace: SuperDenseTrace, f: Formula, t0: Q) -> Q:
    mb = max((g.bound for g in iter_nodes(f)), default=0)
    period = trace.shift + 1
    return t0 + (temporal_depth(f) + 1) * (mb + 2 * period) + trace.entries[-1][0].hi


# forcing a known trace through the unrolled encoding ------------------------------

from mitlbmc.bmc import Unroller, extract_witness, BmcInstance, loop_name  # noqa: E402
from mitlbmc.smt import SolverSession, bool_name, real_name, rat, sym  # noqa: E402
from mitlbmc.sts import DELTA, STS, BVar as SBVar, TRUE as STRUE, delta_cmp, loc_var  # noqa: E402


def free_system(names=("p", "q", "r")) -> STS:
    """A system whose only behaviour is an arbitrary sequence of proposition sets."""
    return STS({n: None for n in names}, (), STRUE, STRUE, delta_cmp(">="), (),
               {n: SBVar(n) for n in names}, None)


def unrolled_entries(trace: SuperDenseTrace, copies: int):
    """Prefix plus ``copies`` loop iterations; returns entries and the loop start."""
    n = len(trace.prefix) + copies * len(trace.loop)
    entries = [trace.at(i) for i in range(n)]
    return entries, n - len(trace.loop)


def force_trace(sts: STS, trace: SuperDenseTrace, copies: int, goal=None, extra=(),
                names=("p", "q", "r")):
    """Solve the bounded encoding with the propositions and durations pinned
    to ``trace``. ``extra`` holds (step, variable, value) Boolean pins.
    Returns (answer, witness-or-None)."""
    entries, j = unrolled_entries(trace, copies)
    k = len(entries) - 1
    u = Unroller(sts, goal)
    lines = u.base()
    for s in range(k + 1):
        lines += u.extend(s)
    lines += u.loop(k)
    for i, (iv, props) in enumerate(entries):
        d = Q(0) if iv.is_singleton else iv.hi - iv.lo
        lines.append(f"(assert (= {sym(real_name(DELTA, i))} {rat(d)}))")
        for n in names:
            lines.append(f"(assert (= {sym(bool_name(n, i))} {'true' if n in props else 'false'}))")
    lines.append(f"(assert {sym(loop_name(j))})")
    for step, var, value in extra:
        lines.append(f"(assert (= {sym(bool_name(var, step))} {'true' if value else 'false'}))")
    with SolverSession() as sess:
        sess.send(*lines)
        ans = sess.check()
        if ans != "sat":
            return ans, None
        model = sess.get_values(u.model_names(k))
    return ans, extract_witness(model, BmcInstance(k, u), list(names))


# random networks and an explicit lasso search -------------------------------------

from mitlbmc.ta import (  # noqa: E402
    NetState, Run, candidate_delays, elapse, enabled_edges, fire, initial_state, is_valid, run_to_trace,
)
from mitlbmc.traces import make_fine, satisfies  # noqa: E402


def random_network_text(rng: random.Random, max_const: int = 3) -> str:
    """One or two automata, one clock each, constants up to ``max_const``."""
    n_aut = rng.choice([1, 1, 2])
    shared = rng.random() < 0.4
    lines = ["clock " + ", ".join(f"x{i}" for i in range(n_aut)) + ";"]
    if shared:
        lines.append("var v : 0..1 = 0;")
    for i in range(n_aut):
        x = f"x{i}"
        locs = [f"l{j}" for j in range(rng.randint(2, 3))]
        lines.append(f"automaton A{i} {{")
        lines.append(f"  init {locs[0]};")
        for loc in locs:
            inv = ""
            if rng.random() < 0.3:
                inv = f" inv {x}{rng.choice(['<', '<='])}{rng.randint(1, max_const)}"
            lines.append(f"  loc {loc}{inv};")
        for _ in range(rng.randint(2, 4)):
            src, dst = rng.choice(locs), rng.choice(locs)
            parts = [f"  edge {src} -> {dst}"]
            guards = []
            if rng.random() < 0.5:
                guards.append(f"{x}{rng.choice(['<', '<=', '>=', '>'])}{rng.randint(0, max_const)}")
            if shared and rng.random() < 0.3:
                guards.append(f"v=={rng.randint(0, 1)}")
            if guards:
                parts.append("when " + " & ".join(guards))
            if shared and rng.random() < 0.3:
                parts.append(f"do v:={rng.randint(0, 1)}")
            if rng.random() < 0.5:
                parts.append(f"reset {x}")
            lines.append(" ".join(parts) + ";")
        lines.append("}")
    return "\n".join(lines) + "\n"


def location_atoms(net) -> list[str]:
    return [f"@{a.name}.{l}" for a in net.automata for l in a.locations]


def lasso_search(net, f: Formula, names, max_entries: int = 8, node_limit: int = 20000):
    """Depth-first search over runs with the simulator's candidate delays for a
    lasso whose f-fine trace has at most ``max_entries`` entries and
    satisfies ``f``. Returns the fine trace or None."""
    maxima = net.clock_maxima()
    bounds = [maxima[x] for x in net.clocks]
    budget = [node_limit]

    def same(a, b):
        return a.discrete() == b.discrete() and all(
            x == y or (x > m and y > m) for x, y, m in zip(a.clocks, b.clocks, bounds))

    def entries(delays):
        return len(delays) + 1 + sum(1 for d in delays if d > 0)

    def visit(states, delays):
        budget[0] -= 1
        if budget[0] < 0:
            return None
        s = states[-1]
        times = [Q(0)]
        for d in delays:
            times.append(times[-1] + d)
        for j in range(len(states) - 1):
            if same(states[j], s) and times[-1] > times[j]:
                tr = run_to_trace(net, Run(list(states), list(delays), j), names)
                if satisfies(tr, f):
                    fine = make_fine(tr, f)
                    if len(fine.prefix) + len(fine.loop) <= max_entries:
                        return fine
        if entries(delays) >= max_entries + 1:
            return None
        edges = enabled_edges(net, s)
        moves = [(fire(net, s, i, e), Q(0)) for i, e in edges]
        if not delays or delays[-1] == 0 or not edges:
            moves += [(elapse(s, d), d) for d in candidate_delays(net, s)
                      if is_valid(net, elapse(s, d))]
        for t, d in moves:
            found = visit(states + [t], delays + [d])
            if found is not None:
                return found
        return None

    s0 = initial_state(net)
    if not is_valid(net, s0):
        return None
    return visit([s0], [])


def witness_run(net, w):
    """Network run read off a witness: singletons become states, open
    intervals become (merged) delays."""
    def net_state(s):
        return NetState(tuple(s.z[loc_var(a.name)] for a in net.automata),
                        tuple(s.z[v.name] for v in net.variables),
                        tuple(s.x[c] for c in net.clocks))
    states, delays = [net_state(w.states[0])], []
    for i in range(w.k + 1):
        nxt = w.states[i + 1]
        if w.deltas[i] > 0:
            states.append(net_state(nxt))
            delays.append(w.deltas[i])
        elif not nxt.z["up"]:
            states.append(net_state(nxt))
            delays.append(Q(0))
    return Run(states, delays)


def merge_elapses(net, run):
    # consecutive delays are one longer delay
    states, delays = [run.states[0]], []
    for s, d in zip(run.states[1:], run.delays):
        if d > 0 and delays and delays[-1] > 0:
            states[-1] = s
            delays[-1] += d
            continue
        states.append(s)
        delays.append(d)
    return Run(states, delays)
