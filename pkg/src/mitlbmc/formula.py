"""Metric temporal formulas with one-sided time bounds.

Formulas are immutable trees. Negation is allowed anywhere right after
parsing; ``to_pnf`` pushes it down to the atoms. Untimed operators are
stored with the canonical bound ``>= 0``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator


class Rel(Enum):
    LT = "<"
    LE = "<="
    GE = ">="
    GT = ">"

    @property
    def is_upper(self) -> bool:
        return self in (Rel.LT, Rel.LE)

    def holds(self, lhs, rhs) -> bool:
        if self is Rel.LT:
            return lhs < rhs
        if self is Rel.LE:
            return lhs <= rhs
        if self is Rel.GE:
            return lhs >= rhs
        return lhs > rhs


class Op(Enum):
    TRUE = "true"
    FALSE = "false"
    ATOM = "atom"
    NEG_ATOM = "neg_atom"
    NOT = "not"
    AND = "and"
    OR = "or"
    UNTIL = "U"
    RELEASE = "R"
    EVENTUALLY = "F"
    ALWAYS = "G"


TEMPORAL = (Op.UNTIL, Op.RELEASE, Op.EVENTUALLY, Op.ALWAYS)


@dataclass(frozen=True)
class Formula:
    op: Op
    args: tuple["Formula", ...] = ()
    name: str | None = None
    rel: Rel = Rel.GE
    bound: int = 0
    pos: tuple[int, int] | None = field(default=None, compare=False, hash=False, repr=False)

    @property
    def is_temporal(self) -> bool:
        return self.op in TEMPORAL

    @property
    def is_untimed(self) -> bool:
        return self.rel is Rel.GE and self.bound == 0

    @property
    def left(self) -> "Formula":
        return self.args[0]

    @property
    def right(self) -> "Formula":
        return self.args[-1]

    def __str__(self) -> str:
        return to_text(self)


# constructors -------------------------------------------------------------

TRUE = Formula(Op.TRUE)
FALSE = Formula(Op.FALSE)


def atom(name: str) -> Formula:
    return Formula(Op.ATOM, name=name)


def neg_atom(name: str) -> Formula:
    return Formula(Op.NEG_ATOM, name=name)


def Not(f: Formula) -> Formula:
    return Formula(Op.NOT, (f,))


def And(a: Formula, b: Formula) -> Formula:
    return Formula(Op.AND, (a, b))


def Or(a: Formula, b: Formula) -> Formula:
    return Formula(Op.OR, (a, b))


def Until(a: Formula, b: Formula, rel: Rel = Rel.GE, n: int = 0) -> Formula:
    return Formula(Op.UNTIL, (a, b), rel=rel, bound=n)


def Release(a: Formula, b: Formula, rel: Rel = Rel.GE, n: int = 0) -> Formula:
    return Formula(Op.RELEASE, (a, b), rel=rel, bound=n)


def Eventually(f: Formula, rel: Rel = Rel.GE, n: int = 0) -> Formula:
    return Formula(Op.EVENTUALLY, (f,), rel=rel, bound=n)


def Always(f: Formula, rel: Rel = Rel.GE, n: int = 0) -> Formula:
    return Formula(Op.ALWAYS, (f,), rel=rel, bound=n)


# printing -----------------------------------------------------------------

def _bound_text(f: Formula) -> str:
    if f.is_untimed:
        return ""
    return f"[{f.rel.value}{f.bound}]"


def to_text(f: Formula) -> str:
    """Fully parenthesised text that ``parse_mitl`` reads back."""
    op = f.op
    if op is Op.TRUE:
        return "true"
    if op is Op.FALSE:
        return "false"
    if op is Op.ATOM:
        return f.name
    if op is Op.NEG_ATOM:
        return "!" + f.name
    if op is Op.NOT:
        return f"!({to_text(f.args[0])})"
    if op is Op.AND:
        return f"({to_text(f.args[0])} & {to_text(f.args[1])})"
    if op is Op.OR:
        return f"({to_text(f.args[0])} | {to_text(f.args[1])})"
    if op in (Op.UNTIL, Op.RELEASE):
        return f"({to_text(f.args[0])} {op.value}{_bound_text(f)} {to_text(f.args[1])})"
    return f"({op.value}{_bound_text(f)} {to_text(f.args[0])})"


# parsing ------------------------------------------------------------------

class MitlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<arrow>->)
  | (?P<num>-?\d+(?:[./]\d+)?)
  | (?P<ident>@[A-Za-z0-9_.=]+|[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<rel><=|>=|<|>)
  | (?P<punct>[!&|()\[\]])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"U", "R", "F", "G", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise MitlSyntaxError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "ident" and s in _KEYWORDS:
                kind = s
            toks.append(_Tok(kind, s, line, col))
        for ch in s:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        i = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            what = "end of input" if t.kind == "eof" else repr(t.text)
            raise MitlSyntaxError(f"expected {text!r}, found {what}", t.line, t.col)
        return self.take()

    def parse(self) -> Formula:
        f = self.implication()
        t = self.peek()
        if t.kind != "eof":
            raise MitlSyntaxError(f"unexpected {t.text!r}", t.line, t.col)
        return f

    def implication(self) -> Formula:
        f = self.disjunction()
        if self.peek().kind == "arrow":
            t = self.take()
            neg = Formula(Op.NOT, (f,), pos=f.pos)
            return Formula(Op.OR, (neg, self.implication()), pos=(t.line, t.col))
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek().text == "|":
            t = self.take()
            f = Formula(Op.OR, (f, self.conjunction()), pos=(t.line, t.col))
        return f

    def conjunction(self) -> Formula:
        f = self.binary_temporal()
        while self.peek().text == "&":
            t = self.take()
            f = Formula(Op.AND, (f, self.binary_temporal()), pos=(t.line, t.col))
        return f

    def binary_temporal(self) -> Formula:
        lhs = self.unary()
        t = self.peek()
        if t.kind in ("U", "R"):
            self.take()
            rel, n = self.bound()
            rhs = self.binary_temporal()
            op = Op.UNTIL if t.kind == "U" else Op.RELEASE
            return Formula(op, (lhs, rhs), rel=rel, bound=n, pos=(t.line, t.col))
        return lhs

    def bound(self) -> tuple[Rel, int]:
        if self.peek().text != "[":
            return Rel.GE, 0
        self.take()
        t = self.take()
        if t.kind != "rel":
            raise MitlSyntaxError(f"unknown bound relation {t.text!r}", t.line, t.col)
        rel = Rel(t.text)
        nt = self.take()
        if nt.kind != "num":
            raise MitlSyntaxError("expected a natural-number bound", nt.line, nt.col)
        if nt.text.startswith("-"):
            raise MitlSyntaxError("negative time bound", nt.line, nt.col)
        if not nt.text.isdigit():
            raise MitlSyntaxError("time bounds must be natural numbers", nt.line, nt.col)
        self.expect("]")
        return rel, int(nt.text)

    def unary(self) -> Formula:
        t = self.peek()
        if t.text == "!":
            self.take()
            return Formula(Op.NOT, (self.unary(),), pos=(t.line, t.col))
        if t.kind in ("F", "G"):
            self.take()
            rel, n = self.bound()
            op = Op.EVENTUALLY if t.kind == "F" else Op.ALWAYS
            return Formula(op, (self.unary(),), rel=rel, bound=n, pos=(t.line, t.col))
        if t.text == "(":
            self.take()
            f = self.implication()
            self.expect(")")
            return f
        if t.kind == "true":
            self.take()
            return Formula(Op.TRUE, pos=(t.line, t.col))
        if t.kind == "false":
            self.take()
            return Formula(Op.FALSE, pos=(t.line, t.col))
        if t.kind == "ident":
            self.take()
            return Formula(Op.ATOM, name=t.text, pos=(t.line, t.col))
        if t.kind == "eof":
            raise MitlSyntaxError("missing operand", t.line, t.col)
        raise MitlSyntaxError(f"unexpected {t.text!r}", t.line, t.col)


def parse_mitl(text: str) -> Formula:
    """Parse the ASCII formula syntax; negation may appear anywhere."""
    if not text.strip():
        raise MitlSyntaxError("empty formula", 1, 1)
    return _Parser(text).parse()


# normal forms -------------------------------------------------------------

_DUAL = {
    Op.AND: Op.OR,
    Op.OR: Op.AND,
    Op.UNTIL: Op.RELEASE,
    Op.RELEASE: Op.UNTIL,
    Op.EVENTUALLY: Op.ALWAYS,
    Op.ALWAYS: Op.EVENTUALLY,
}


def to_pnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations to the atoms using the standard dualities."""
    op = f.op
    if op is Op.NOT:
        return to_pnf(f.args[0], not negate)
    if op is Op.TRUE:
        return FALSE if negate else TRUE
    if op is Op.FALSE:
        return TRUE if negate else FALSE
    if op is Op.ATOM:
        return neg_atom(f.name) if negate else atom(f.name)
    if op is Op.NEG_ATOM:
        return atom(f.name) if negate else neg_atom(f.name)
    new_op = _DUAL[op] if negate else op
    args = tuple(to_pnf(a, negate) for a in f.args)
    return Formula(new_op, args, rel=f.rel, bound=f.bound)


def is_pnf(f: Formula) -> bool:
    return all(g.op is not Op.NOT for g in iter_nodes(f))


def rewrite_upper_until(f: Formula) -> Formula:
    """Replace upper-bounded until/release by an F/G conjunct plus untimed form.

    ``true U x`` and ``false R x`` are first normalised to their F/G forms,
    which are left alone, as are all lower-bounded operators.
    """
    op = f.op
    args = tuple(rewrite_upper_until(a) for a in f.args)
    if op is Op.UNTIL and args[0].op is Op.TRUE:
        return Eventually(args[1], f.rel, f.bound)
    if op is Op.RELEASE and args[0].op is Op.FALSE:
        return Always(args[1], f.rel, f.bound)
    if op is Op.UNTIL and f.rel.is_upper:
        lhs, rhs = args
        return And(Eventually(rhs, f.rel, f.bound), Until(lhs, rhs))
    if op is Op.RELEASE and f.rel.is_upper:
        # the dual of the until identity is a disjunction
        lhs, rhs = args
        return Or(Always(rhs, f.rel, f.bound), Release(lhs, rhs))
    if not args:
        return f
    return Formula(op, args, name=f.name, rel=f.rel, bound=f.bound)


def iter_nodes(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(g.args)


def max_bound(f: Formula) -> int:
    return max((g.bound for g in iter_nodes(f)), default=0)


def atoms_of(f: Formula) -> set[str]:
    return {g.name for g in iter_nodes(f) if g.op in (Op.ATOM, Op.NEG_ATOM)}


@dataclass(frozen=True)
class SubformulaTable:
    entries: tuple[Formula, ...]

    def index(self, f: Formula) -> int:
        return self._index[f]

    def __post_init__(self):
        object.__setattr__(self, "_index", {g: i for i, g in enumerate(self.entries)})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def root(self) -> Formula:
        return self.entries[-1]


def subformula_order(f: Formula) -> SubformulaTable:
    """Distinct subformulas, children before parents, root last."""
    seen: dict[Formula, None] = {}

    def visit(g: Formula):
        if g in seen:
            return
        for a in g.args:
            visit(a)
        seen[g] = None

    visit(f)
    return SubformulaTable(tuple(seen))


def as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)
