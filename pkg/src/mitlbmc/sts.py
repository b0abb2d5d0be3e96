"""Symbolic transition systems whose real variables behave like clocks.

Formulas range over discrete variables ``Z`` (Booleans and finite enums),
clock variables ``X`` and the step duration ``delta``. Every atom that
mentions a clock or ``delta`` must have one of five shapes:

    x' = 0        x' = x + delta        x ~ n        x + delta ~ n      delta ~ 0

with ``n`` a natural number. ``check_wellformed`` enforces this.

A state with ``delta = 0`` stands for a singleton interval, a state with
``delta > 0`` for the open interval that follows it; clock values are
those at the left end.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .ta import (
    Cmp, Network, NetState, PAnd, PConst, PLoc, PNot, POr, PVar, Run,
)

DELTA = "delta"


# terms ------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class BVar:
    name: str
    nxt: bool = False


@dataclass(frozen=True)
class EnumEq:
    name: str
    value: object
    nxt: bool = False


@dataclass(frozen=True)
class Same:
    """``z' = z`` for a discrete variable."""
    name: str


@dataclass(frozen=True)
class Lin:
    """Linear atom ``sum(coeff * sym) rel const``.

    A symbol is ``(clock, nxt)`` or ``(DELTA, False)``.
    """
    coeffs: tuple[tuple[tuple[str, bool], int], ...]
    rel: str
    const: Fraction = Fraction(0)


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Iff:
    lhs: object
    rhs: object


TRUE = Const(True)
FALSE = Const(False)
RELS = ("<", "<=", "=", ">=", ">")


def conj(*args) -> object:
    flat = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        flat.extend(a.args if isinstance(a, And) else [a])
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args) -> object:
    flat = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        flat.extend(a.args if isinstance(a, Or) else [a])
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(a) -> object:
    if isinstance(a, Const):
        return Const(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def _lin(pairs, rel: str, const) -> Lin:
    assert rel in RELS, rel
    return Lin(tuple(pairs), rel, Fraction(const))


def clock_reset(x: str) -> Lin:
    return _lin([((x, True), 1)], "=", 0)


def clock_advance(x: str) -> Lin:
    return _lin([((x, True), 1), ((x, False), -1), ((DELTA, False), -1)], "=", 0)


def clock_cmp(x: str, rel: str, n: int) -> Lin:
    return _lin([((x, False), 1)], rel, n)


def clock_delta_cmp(x: str, rel: str, n: int) -> Lin:
    return _lin([((x, False), 1), ((DELTA, False), 1)], rel, n)


def delta_cmp(rel: str) -> Lin:
    return _lin([((DELTA, False), 1)], rel, 0)


def nxt(z: str) -> BVar:
    return BVar(z, True)


def atoms(t) -> Iterator:
    if isinstance(t, (Not,)):
        yield from atoms(t.arg)
    elif isinstance(t, (And, Or)):
        for a in t.args:
            yield from atoms(a)
    elif isinstance(t, (Implies, Iff)):
        yield from atoms(t.lhs)
        yield from atoms(t.rhs)
    else:
        yield t


def atom_shape(a: Lin) -> str | None:
    """Name of the legal shape of a linear atom, or None."""
    c = dict(a.coeffs)
    syms = set(c)
    nat = a.const >= 0 and a.const.denominator == 1
    if len(syms) == 1:
        (sym,) = syms
        name, is_next = sym
        if c[sym] != 1:
            return None
        if name == DELTA:
            return "delta~0" if a.const == 0 else None
        if is_next:
            return "reset" if a.rel == "=" and a.const == 0 else None
        return "clock~n" if nat else None
    if len(syms) == 2 and (DELTA, False) in syms:
        (x,) = syms - {(DELTA, False)}
        if x[0] != DELTA and not x[1] and c[x] == 1 and c[(DELTA, False)] == 1 and nat:
            return "clock+delta~n"
        return None
    if len(syms) == 3 and a.rel == "=" and a.const == 0:
        xs = {s[0] for s in syms if s[0] != DELTA}
        if len(xs) == 1:
            (x,) = xs
            if c.get((x, True)) == 1 and c.get((x, False)) == -1 and c.get((DELTA, False)) == -1:
                return "advance"
    return None


def lin_text(a: Lin) -> str:
    parts = []
    for (name, is_next), k in a.coeffs:
        sym = name + ("'" if is_next else "")
        if k == 1:
            parts.append(sym)
        elif k == -1:
            parts.append("-" + sym)
        else:
            parts.append(f"{k}*{sym}")
    return " + ".join(parts).replace("+ -", "- ") + f" {a.rel} {a.const}"


# systems ------------------------------------------------------------------------

@dataclass(frozen=True)
class StsState:
    z: Mapping[str, object]
    x: Mapping[str, Fraction]

    def __post_init__(self):
        if any(v < 0 for v in self.x.values()):
            raise ValueError("clock values must be non-negative")

    def key(self):
        return tuple(sorted(self.z.items())), tuple(sorted(self.x.items()))


@dataclass
class STS:
    """Discrete variables map to ``None`` (Boolean) or a tuple domain."""
    zvars: dict[str, tuple | None]
    clocks: tuple[str, ...]
    init: object = TRUE
    inv: object = TRUE
    trans: object = TRUE
    fair: tuple = ()
    ap: dict[str, object] = field(default_factory=dict)
    open_var: str | None = None

    def extend(self, zvars=None, clocks=(), init=TRUE, trans=TRUE, fair=()) -> "STS":
        z = dict(self.zvars)
        z.update(zvars or {})
        return replace(self, zvars=z, clocks=self.clocks + tuple(clocks),
                       init=conj(self.init, init), trans=conj(self.trans, trans),
                       fair=self.fair + tuple(fair))

    def value_count(self) -> int:
        n = 1
        for dom in self.zvars.values():
            n *= 2 if dom is None else len(dom)
        return n


@dataclass(frozen=True)
class Violation:
    where: str
    atom: object
    reason: str

    def __str__(self):
        return f"{self.where}: {self.reason}: {self.atom}"


def _check_term(sts: STS, where: str, t, allow_next: bool, allow_delta: bool) -> list[Violation]:
    out = []
    for a in atoms(t):
        if isinstance(a, Const):
            continue
        if isinstance(a, (BVar, EnumEq)):
            if a.name not in sts.zvars:
                out.append(Violation(where, a, "undeclared variable"))
            elif isinstance(a, BVar) and sts.zvars[a.name] is not None:
                out.append(Violation(where, a, "enum variable used as Boolean"))
            elif isinstance(a, EnumEq) and (sts.zvars[a.name] is None or a.value not in sts.zvars[a.name]):
                out.append(Violation(where, a, "value outside enum domain"))
            if a.nxt and not allow_next:
                out.append(Violation(where, a, "next-state variable outside T"))
        elif isinstance(a, Same):
            if a.name not in sts.zvars:
                out.append(Violation(where, a, "undeclared variable"))
            if not allow_next:
                out.append(Violation(where, a, "next-state variable outside T"))
        elif isinstance(a, Lin):
            if a.rel not in RELS:
                out.append(Violation(where, a, "unknown relation"))
                continue
            shape = atom_shape(a)
            if shape is None:
                out.append(Violation(where, a, "clock atom of an illegal shape"))
                continue
            for (name, is_next), _ in a.coeffs:
                if name != DELTA and name not in sts.clocks:
                    out.append(Violation(where, a, f"undeclared clock {name}"))
            if not allow_next and shape in ("reset", "advance"):
                out.append(Violation(where, a, "next-state clock outside T"))
            if not allow_delta and any(s[0] == DELTA for s, _ in a.coeffs):
                out.append(Violation(where, a, "delta outside T"))
        else:
            out.append(Violation(where, a, "not a term"))
    return out


def check_wellformed(sts: STS) -> list[Violation]:
    out = []
    out += _check_term(sts, "I", sts.init, False, False)
    out += _check_term(sts, "INV", sts.inv, False, False)
    out += _check_term(sts, "T", sts.trans, True, True)
    for i, f in enumerate(sts.fair):
        out += _check_term(sts, f"F[{i}]", f, False, False)
        out += [Violation(f"F[{i}]", a, "fairness mentions a clock")
                for a in atoms(f) if isinstance(a, Lin)]
    for name, f in sts.ap.items():
        out += _check_term(sts, f"AP[{name}]", f, False, False)
        out += [Violation(f"AP[{name}]", a, "proposition mentions a clock")
                for a in atoms(f) if isinstance(a, Lin)]
    if sts.open_var is not None and sts.zvars.get(sts.open_var, ()) is not None:
        out.append(Violation("open", sts.open_var, "open marker is not a Boolean"))
    return out


# evaluation --------------------------------------------------------------------------

class SortError(TypeError):
    pass


def _zval(state: StsState | None, name: str):
    if state is None:
        raise SortError(f"next-state value of {name} requested without a successor")
    if name not in state.z:
        raise SortError(f"no value for {name}")
    return state.z[name]


def evaluate(t, cur: StsState, delta=None, succ: StsState | None = None) -> bool:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, BVar):
        v = _zval(succ if t.nxt else cur, t.name)
        if not isinstance(v, bool):
            raise SortError(f"{t.name} is not Boolean")
        return v
    if isinstance(t, EnumEq):
        v = _zval(succ if t.nxt else cur, t.name)
        if isinstance(v, bool):
            raise SortError(f"{t.name} is Boolean, not an enum")
        return v == t.value
    if isinstance(t, Same):
        return _zval(succ, t.name) == _zval(cur, t.name)
    if isinstance(t, Lin):
        total = Fraction(0)
        for (name, is_next), k in t.coeffs:
            if name == DELTA:
                if delta is None:
                    raise SortError("delta requested outside a step")
                total += k * Fraction(delta)
            else:
                st = succ if is_next else cur
                if st is None:
                    raise SortError(f"next-state value of {name} requested without a successor")
                total += k * st.x[name]
        return Cmp({"=": "=="}.get(t.rel, t.rel)).holds(total, t.const)
    if isinstance(t, Not):
        return not evaluate(t.arg, cur, delta, succ)
    if isinstance(t, And):
        return all(evaluate(a, cur, delta, succ) for a in t.args)
    if isinstance(t, Or):
        return any(evaluate(a, cur, delta, succ) for a in t.args)
    if isinstance(t, Implies):
        return (not evaluate(t.lhs, cur, delta, succ)) or evaluate(t.rhs, cur, delta, succ)
    if isinstance(t, Iff):
        return evaluate(t.lhs, cur, delta, succ) == evaluate(t.rhs, cur, delta, succ)
    raise SortError(f"not a term: {t!r}")


def _check_sorts(sts: STS, s: StsState):
    for name, dom in sts.zvars.items():
        if name not in s.z:
            raise SortError(f"state lacks {name}")
        v = s.z[name]
        if dom is None and not isinstance(v, bool):
            raise SortError(f"{name} should be Boolean, got {v!r}")
        if dom is not None and (isinstance(v, bool) or v not in dom):
            raise SortError(f"{name} outside its domain: {v!r}")
    for x in sts.clocks:
        if x not in s.x:
            raise SortError(f"state lacks clock {x}")


def eval_state(sts: STS, which: str, s: StsState) -> bool:
    _check_sorts(sts, s)
    return evaluate({"I": sts.init, "INV": sts.inv}[which], s)


def eval_step(sts: STS, s: StsState, delta, t: StsState) -> bool:
    _check_sorts(sts, s)
    _check_sorts(sts, t)
    return evaluate(sts.trans, s, Fraction(delta), t)


def eval_ap(sts: STS, name: str, s: StsState) -> bool:
    return evaluate(sts.ap[name], s)


def eval_fair(sts: STS, index: int, s: StsState) -> bool:
    return evaluate(sts.fair[index], s)


# networks ------------------------------------------------------------------------------

def loc_var(automaton: str) -> str:
    return f"at_{automaton}"


U0, UP = "u0", "up"


def _cmp_rel(op: Cmp) -> str:
    return "=" if op is Cmp.EQ else op.value


def _prop_term(net: Network, expr):
    if isinstance(expr, PConst):
        return Const(expr.value)
    if isinstance(expr, PLoc):
        return EnumEq(loc_var(expr.automaton), expr.loc)
    if isinstance(expr, PVar):
        return _var_test(net, expr.var, expr.op, expr.value)
    if isinstance(expr, PNot):
        return neg(_prop_term(net, expr.arg))
    if isinstance(expr, PAnd):
        return conj(*(_prop_term(net, a) for a in expr.args))
    if isinstance(expr, POr):
        return disj(*(_prop_term(net, a) for a in expr.args))
    raise TypeError(expr)


def _var_test(net: Network, var: str, op: Cmp, value: int):
    dom = net.var(var).domain
    return disj(*(EnumEq(var, k) for k in dom if op.holds(k, value)))


def _clock_guard(atoms_) -> object:
    return conj(*(clock_cmp(a.clock, _cmp_rel(a.op), a.bound) for a in atoms_))


class NetworkError(ValueError):
    pass


def translate_network(net: Network, ap_names: Iterable[str] | None = None) -> STS:
    names = set()
    for a in net.automata:
        for n in (loc_var(a.name),):
            if n in names or any(v.name == n for v in net.variables):
                raise NetworkError(f"name clash on {n}")
            names.add(n)
    for v in net.variables:
        if v.name in (U0, UP):
            raise NetworkError(f"variable name {v.name} is reserved")
    zvars: dict[str, tuple | None] = {}
    for a in net.automata:
        zvars[loc_var(a.name)] = tuple(a.locations)
    for v in net.variables:
        zvars[v.name] = v.domain
    zvars[U0] = None
    zvars[UP] = None
    clocks = tuple(net.clocks)

    init = conj(
        *(EnumEq(loc_var(a.name), a.init) for a in net.automata),
        *(EnumEq(v.name, v.init) for v in net.variables),
        *(clock_cmp(x, "=", 0) for x in clocks),
        BVar(U0),
    )
    inv = conj(*(
        Implies(EnumEq(loc_var(a.name), l), _clock_guard(a.invariant(l)))
        for a in net.automata for l in a.locations if a.invariant(l)
    ))

    keep_z = [loc_var(a.name) for a in net.automata] + [v.name for v in net.variables]
    edges = []
    for a in net.automata:
        others = [Same(loc_var(b.name)) for b in net.automata if b is not a]
        for e in a.edges:
            upd = dict(e.updates)
            edges.append(conj(
                EnumEq(loc_var(a.name), e.src),
                EnumEq(loc_var(a.name), e.dst, True),
                _clock_guard(e.clock_guard),
                *(_var_test(net, t.var, t.op, t.value) for t in e.var_guard),
                *(EnumEq(v.name, upd[v.name], True) if v.name in upd else Same(v.name)
                  for v in net.variables),
                *others,
                *(clock_reset(x) if x in e.resets else clock_advance(x) for x in clocks),
            ))
    trans = conj(
        Implies(BVar(U0), delta_cmp("=")),
        Implies(BVar(UP), delta_cmp(">")),
        disj(BVar(U0), BVar(UP)),
        neg(conj(BVar(U0), BVar(UP))),
        Implies(conj(BVar(U0), nxt(U0)), disj(*edges)),
        Implies(disj(BVar(UP), nxt(UP)),
                conj(*(Same(z) for z in keep_z), *(clock_advance(x) for x in clocks))),
        disj(BVar(U0), nxt(U0)),
        *(disj(clock_reset(x), clock_advance(x)) for x in clocks),
        delta_cmp(">="),
    )
    if ap_names is None:
        ap_names = net.ap_names()
    ap = {n: _prop_term(net, net.resolve_ap(n)) for n in ap_names}
    return STS(zvars, clocks, init, inv, trans, (), ap, UP)


def ap_term(sts: STS, net: Network, name: str):
    if name in sts.ap:
        return sts.ap[name]
    return _prop_term(net, net.resolve_ap(name))


def state_of(net: Network, s: NetState, delta) -> StsState:
    z: dict[str, object] = {loc_var(a.name): l for a, l in zip(net.automata, s.locs)}
    z.update({v.name: x for v, x in zip(net.variables, s.vals)})
    z[U0] = delta == 0
    z[UP] = delta > 0
    return StsState(z, dict(zip(net.clocks, s.clocks)))


def run_steps(net: Network, run: Run) -> list[tuple[StsState, Fraction]]:
    """STS states for a run: one singleton per state, one open state per delay.

    The final state gets duration 0 (a singleton).
    """
    out = []
    for i, s in enumerate(run.states):
        out.append((state_of(net, s, 0), Fraction(0)))
        if i < len(run.delays) and run.delays[i] > 0:
            d = run.delays[i]
            out.append((state_of(net, s, d), d))
    return out


# debug dump ------------------------------------------------------------------------------

def sexpr(t) -> str:
    if isinstance(t, Const):
        return "true" if t.value else "false"
    if isinstance(t, BVar):
        return t.name + ("'" if t.nxt else "")
    if isinstance(t, EnumEq):
        return f"(= {t.name}{chr(39) if t.nxt else ''} {t.value})"
    if isinstance(t, Same):
        return f"(= {t.name}' {t.name})"
    if isinstance(t, Lin):
        terms = []
        for (name, is_next), k in t.coeffs:
            sym = name + ("'" if is_next else "")
            terms.append(sym if k == 1 else f"(* {k} {sym})")
        lhs = terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"
        return f"({t.rel} {lhs} {t.const})"
    if isinstance(t, Not):
        return f"(not {sexpr(t.arg)})"
    if isinstance(t, And):
        return f"(and {' '.join(sexpr(a) for a in t.args)})"
    if isinstance(t, Or):
        return f"(or {' '.join(sexpr(a) for a in t.args)})"
    if isinstance(t, Implies):
        return f"(=> {sexpr(t.lhs)} {sexpr(t.rhs)})"
    if isinstance(t, Iff):
        return f"(= {sexpr(t.lhs)} {sexpr(t.rhs)})"
    raise TypeError(t)


def dump(sts: STS) -> str:
    lines = []
    for name, dom in sts.zvars.items():
        sort = "Bool" if dom is None else "(enum " + " ".join(str(v) for v in dom) + ")"
        lines.append(f"(var {name} {sort})")
    for x in sts.clocks:
        lines.append(f"(clock {x})")
    if sts.open_var:
        lines.append(f"(open {sts.open_var})")
    lines.append(f"(init {sexpr(sts.init)})")
    lines.append(f"(inv {sexpr(sts.inv)})")
    lines.append(f"(trans {sexpr(sts.trans)})")
    for f in sts.fair:
        lines.append(f"(fair {sexpr(f)})")
    for name in sorted(sts.ap):
        lines.append(f"(ap {name} {sexpr(sts.ap[name])})")
    return "\n".join(lines) + "\n"
