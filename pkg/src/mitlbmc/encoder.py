"""Symbolic evaluation of temporal formulas inside a transition system.

Every subformula gets a Boolean output variable. The constraints added to
the transition relation make sure that whenever the output is true in a
state, the subformula holds on the whole interval the state stands for.
Timed operators measure distances with an extra clock each.
"""
from __future__ import annotations

from typing import Callable

from .formula import Formula, Op, Rel, subformula_order
from .sts import (
    STS, BVar, Const, FALSE, Iff, Implies, TRUE, check_wellformed, clock_advance,
    clock_cmp, clock_delta_cmp, clock_reset, conj, delta_cmp, disj, neg,
)

OPEN = "enc!open"


class EncodingError(ValueError):
    pass


def aux(index: int, role: str) -> str:
    return f"enc!{index}!{role}"


def output_var(index: int) -> str:
    return aux(index, "out")


def _next(t):
    if isinstance(t, BVar):
        return BVar(t.name, True)
    if isinstance(t, Const):
        return t
    raise TypeError(t)


class _Ctx:
    def __init__(self, sts: STS, resolve: Callable[[str], object]):
        self.resolve = resolve
        self.zvars: dict = {}
        self.clocks: list[str] = []
        self.init: list = []
        self.trans: list = []
        self.fair: list = []
        if sts.open_var is None:
            self.zvars[OPEN] = None
            self.trans.append(Iff(BVar(OPEN), delta_cmp(">")))
            self.open = BVar(OPEN)
        else:
            self.open = BVar(sts.open_var)

    def boolean(self, index: int, role: str) -> BVar:
        name = aux(index, role)
        self.zvars[name] = None
        return BVar(name)

    def clock(self, index: int, role: str) -> str:
        name = aux(index, role)
        self.clocks.append(name)
        return name


def encode_formula(sts: STS, f: Formula, resolve: Callable[[str], object] | None = None) -> STS:
    """Return ``sts`` extended so that ``output_var(len(table) - 1)`` encodes ``f``.

    ``f`` must be in positive normal form with upper-bounded untils and
    releases already rewritten.
    """
    if resolve is None:
        def resolve(name):
            if name not in sts.ap:
                raise EncodingError(f"unknown atomic proposition {name!r}")
            return sts.ap[name]
    table = subformula_order(f)
    ctx = _Ctx(sts, resolve)
    for i, g in enumerate(table):
        _encode(ctx, table, i, g)
    out = sts.extend(ctx.zvars, ctx.clocks, conj(*ctx.init), conj(*ctx.trans), ctx.fair)
    if out.open_var is None:
        out.open_var = OPEN
    return out


def _encode(ctx: _Ctx, table, i: int, g: Formula):
    psi = ctx.boolean(i, "out")
    child = [BVar(output_var(table.index(a))) for a in g.args]
    T = ctx.trans.append
    op = g.op
    if op is Op.TRUE:
        T(psi)
    elif op is Op.FALSE:
        T(neg(psi))
    elif op is Op.ATOM:
        T(Iff(psi, ctx.resolve(g.name)))
    elif op is Op.NEG_ATOM:
        T(Iff(psi, neg(ctx.resolve(g.name))))
    elif op is Op.AND:
        T(Iff(psi, conj(*child)))
    elif op is Op.OR:
        T(Iff(psi, disj(*child)))
    elif op is Op.NOT:
        raise EncodingError("formula is not in positive normal form")
    elif op in (Op.UNTIL, Op.EVENTUALLY):
        l = child[0] if op is Op.UNTIL and g.args[0].op is not Op.TRUE else TRUE
        r = child[-1]
        if g.rel is Rel.GE and g.bound == 0:
            _until_untimed(ctx, psi, l, r)
        elif g.rel.is_upper:
            if l != TRUE:
                raise EncodingError(f"upper-bounded until must be rewritten first: {g}")
            if g.bound == 0:
                if g.rel is Rel.LT:
                    T(neg(psi))
                else:
                    _eventually_now(ctx, psi, r)
            else:
                _eventually_upper(ctx, i, psi, r, g.rel, g.bound)
        else:
            _until_lower(ctx, i, psi, l, r, g.rel, g.bound)
    elif op in (Op.RELEASE, Op.ALWAYS):
        l = child[0] if op is Op.RELEASE and g.args[0].op is not Op.FALSE else FALSE
        r = child[-1]
        if g.rel is Rel.GE and g.bound == 0:
            _release_untimed(ctx, i, psi, l, r)
        elif g.rel.is_upper:
            if l != FALSE:
                raise EncodingError(f"upper-bounded release must be rewritten first: {g}")
            if g.bound == 0:
                if g.rel is Rel.LE:
                    _always_now(ctx, psi, r)
            else:
                _always_upper(ctx, i, psi, r, g.rel, g.bound)
        else:
            _release_lower(ctx, i, psi, l, r, g.rel, g.bound)
    else:
        raise EncodingError(f"unexpected operator {op}")


def _until_untimed(ctx: _Ctx, psi, l, r):
    o = ctx.open
    ctx.trans += [
        Implies(conj(psi, o), conj(l, disj(r, _next(r), conj(_next(l), _next(psi))))),
        Implies(conj(psi, neg(o)), disj(conj(neg(_next(o)), _next(r)), conj(_next(l), _next(psi)))),
    ]
    ctx.fair.append(disj(neg(psi), r))


def _eventually_now(ctx: _Ctx, psi, r):
    o = ctx.open
    ctx.trans.append(Implies(psi, conj(neg(o), neg(_next(o)), disj(_next(r), _next(psi)))))


def _eventually_upper(ctx: _Ctx, i: int, psi, r, rel: Rel, n: int):
    o, o2 = ctx.open, _next(ctx.open)
    c = ctx.clock(i, "c")
    lefto = ctx.boolean(i, "lefto")
    ctx.init += [clock_cmp(c, "=", 0), neg(lefto)]
    reset = conj(disj(neg(psi), conj(o, r), _next(r)), _next(psi))
    if rel is Rel.LT:
        tc = disj(clock_delta_cmp(c, "<", n), conj(lefto, clock_delta_cmp(c, "<=", n)))
    else:
        tc = disj(clock_delta_cmp(c, "<", n),
                  conj(disj(neg(o2), lefto), clock_delta_cmp(c, "<=", n)))
    ctx.trans += [
        Implies(conj(psi, o), disj(r, _next(r), _next(psi))),
        Implies(conj(psi, neg(o)), disj(conj(neg(o2), _next(r)), _next(psi))),
        Implies(reset, conj(clock_reset(c), Iff(_next(lefto), o2))),
        Implies(neg(reset), conj(clock_advance(c), Iff(_next(lefto), lefto))),
        Implies(conj(psi, neg(conj(r, o))), tc),
    ]


def _until_lower(ctx: _Ctx, i: int, psi, l, r, rel: Rel, n: int):
    o = ctx.open
    c = ctx.clock(i, "c")
    righto = ctx.boolean(i, "righto")
    oblig = ctx.boolean(i, "oblig")
    rhat = ctx.boolean(i, "rhat")
    if rel is Rel.GT:
        tc = disj(clock_delta_cmp(c, ">", n), conj(righto, clock_delta_cmp(c, ">=", n)))
    else:
        tc = disj(clock_delta_cmp(c, ">", n),
                  conj(disj(righto, neg(o)), clock_delta_cmp(c, ">=", n)))
    ctx.trans += [
        Iff(rhat, conj(r, tc)),
        Implies(psi, oblig),
    ]
    if n > 0:
        ctx.trans.append(Implies(psi, conj(_next(oblig), _next(l))))
    ctx.trans += [
        Implies(conj(oblig, o), conj(l, disj(rhat, _next(rhat), conj(_next(l), _next(oblig))))),
        Implies(conj(oblig, neg(o)),
                disj(conj(neg(_next(o)), _next(rhat)), conj(_next(l), _next(oblig)))),
        Implies(psi, conj(clock_reset(c), Iff(_next(righto), o))),
        Implies(neg(psi), conj(clock_advance(c), Iff(_next(righto), righto))),
    ]
    ctx.fair.append(disj(neg(oblig), r))


def _release_untimed(ctx: _Ctx, i: int, psi, l, r):
    o = ctx.open
    oblig = ctx.boolean(i, "oblig")
    ctx.trans += [
        Implies(conj(psi, o), oblig),
        Implies(conj(psi, neg(o)), _next(oblig)),
        Implies(oblig, disj(l, _next(oblig))),
        Implies(oblig, disj(conj(o, l), r)),
    ]


def _always_now(ctx: _Ctx, psi, r):
    o = ctx.open
    ctx.trans.append(Implies(psi, disj(o, _next(o), conj(_next(r), _next(psi)))))


def _always_upper(ctx: _Ctx, i: int, psi, r, rel: Rel, n: int):
    o = ctx.open
    c = ctx.clock(i, "c")
    righto = ctx.boolean(i, "righto")
    if rel is Rel.LT:
        tc = clock_cmp(c, "<", n)
    else:
        tc = disj(clock_cmp(c, "<", n), conj(clock_cmp(c, "<=", n), neg(o), neg(righto)))
    ctx.trans += [
        Implies(disj(conj(psi, o), tc), r),
        Implies(psi, conj(clock_reset(c), Iff(_next(righto), o))),
        Implies(neg(psi), conj(clock_advance(c), Iff(_next(righto), righto))),
    ]


def _release_lower(ctx: _Ctx, i: int, psi, l, r, rel: Rel, n: int):
    o, o2 = ctx.open, _next(ctx.open)
    c = ctx.clock(i, "c")
    lefto = ctx.boolean(i, "lefto")
    oblig = ctx.boolean(i, "oblig")
    ctx.init += [clock_cmp(c, "=", 0), neg(lefto)]
    if n > 0:
        # delta > n is written z + delta > n with a clock z that stays 0
        z = ctx.clock(i, "z")
        ctx.init.append(clock_cmp(z, "=", 0))
        ctx.trans.append(clock_reset(z))
        long_step = clock_delta_cmp(z, ">", n)
    else:
        long_step = delta_cmp(">")
    if rel is Rel.GT:
        tc = clock_delta_cmp(c, ">", n)
    else:
        tc = disj(clock_delta_cmp(c, ">", n), conj(neg(lefto), neg(o), clock_delta_cmp(c, ">=", n)))
    delayed = conj(neg(o), oblig, l, psi)
    reset = conj(_next(psi), disj(neg(oblig), l), disj(o, neg(psi)))
    ctx.trans += [
        Implies(conj(psi, o), oblig),
        Implies(conj(psi, neg(o)), _next(oblig)),
        Implies(oblig, disj(l, _next(oblig))),
        Implies(conj(oblig, tc), disj(conj(l, o), r)),
        Implies(conj(psi, long_step), disj(l, r)),
        Implies(delayed, conj(clock_reset(c), neg(_next(lefto)))),
        Implies(reset, conj(clock_reset(c), Iff(_next(lefto), o2))),
        Implies(conj(neg(reset), neg(delayed)), conj(clock_advance(c), Iff(_next(lefto), lefto))),
    ]


def encode_checked(sts: STS, f: Formula, resolve=None) -> STS:
    out = encode_formula(sts, f, resolve)
    problems = check_wellformed(out)
    if problems:
        raise EncodingError("; ".join(str(p) for p in problems[:5]))
    return out
