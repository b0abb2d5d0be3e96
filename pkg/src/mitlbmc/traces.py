"""Super-dense timed traces as finite lassos, and the exact satisfaction check.

A trace is a sequence of (interval, propositions) pairs. Intervals are
either singletons ``[t,t]`` or open ``(a,b)``. The infinite trace is the
prefix followed by the loop repeated forever, each repetition shifted by
``shift`` time units.

Evaluation works bottom-up over the subformulas. Before a timed operator
with bound ``n`` is evaluated, every open interval is split at the points
``B - n`` for interval endpoints ``B`` further ahead. Between such points
the truth of the operator cannot change, so it is computed once per piece.
Because the loop part of a lasso is time-shift periodic, the truth of any
formula is the same in every loop iteration, and only one copy of the loop
has to be evaluated.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .formula import Formula, Op, Rel, subformula_order


class TraceError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted, use Fraction or a string")
    return Fraction(x)


def fmt_rat(x: Fraction) -> str:
    return str(x)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = to_fraction(self.lo), to_fraction(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo < 0:
            raise TraceError(f"negative interval bound {lo}")
        if hi < lo:
            raise TraceError(f"empty interval ({lo},{hi})")

    @staticmethod
    def point(t) -> "Interval":
        return Interval(t, t)

    @staticmethod
    def open(a, b) -> "Interval":
        iv = Interval(a, b)
        if iv.lo == iv.hi:
            raise TraceError(f"open interval needs lo < hi, got ({a},{b})")
        return iv

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, t: Fraction) -> bool:
        if self.is_singleton:
            return t == self.lo
        return self.lo < t < self.hi

    def shifted(self, d: Fraction) -> "Interval":
        return Interval(self.lo + d, self.hi + d)

    def sample(self) -> Fraction:
        return self.lo if self.is_singleton else (self.lo + self.hi) / 2

    def __str__(self) -> str:
        if self.is_singleton:
            return f"[{fmt_rat(self.lo)},{fmt_rat(self.lo)}]"
        return f"({fmt_rat(self.lo)},{fmt_rat(self.hi)})"


Entry = tuple[Interval, frozenset]


def adjacency_ok(prev: Interval, nxt: Interval) -> bool:
    if not prev.is_singleton:
        return nxt.is_singleton and nxt.lo == prev.hi
    return nxt.lo == prev.lo


def _entry(iv: Interval, props: Iterable[str]) -> Entry:
    return (iv, frozenset(props))


@dataclass(frozen=True)
class Point:
    index: int
    t: Fraction

    def __post_init__(self):
        object.__setattr__(self, "t", to_fraction(self.t))


@dataclass(frozen=True)
class SuperDenseTrace:
    prefix: tuple[Entry, ...]
    loop: tuple[Entry, ...]
    shift: Fraction

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(_entry(i, p) for i, p in self.prefix))
        object.__setattr__(self, "loop", tuple(_entry(i, p) for i, p in self.loop))
        object.__setattr__(self, "shift", to_fraction(self.shift))
        self._validate()

    def _validate(self):
        if not self.loop:
            raise TraceError("the loop part must not be empty")
        if self.shift <= 0:
            raise TraceError("loop shift must be positive")
        seq = [iv for iv, _ in self.prefix + self.loop]
        if seq[0] != Interval.point(0):
            raise TraceError("the first interval must be [0,0]")
        seq.append(self.loop[0][0].shifted(self.shift))
        for k, (a, b) in enumerate(zip(seq, seq[1:])):
            if not adjacency_ok(a, b):
                raise TraceError(f"interval {a} cannot be followed by {b} (position {k})")

    @property
    def entries(self) -> tuple[Entry, ...]:
        return self.prefix + self.loop

    def base_of(self, idx: int) -> tuple[int, int]:
        """Map an unrolled index to (base position, loop iteration)."""
        if idx < 0:
            raise IndexError(idx)
        npre = len(self.prefix)
        if idx < npre:
            return idx, 0
        k, it = (idx - npre) % len(self.loop), (idx - npre) // len(self.loop)
        return npre + k, it

    def at(self, idx: int) -> Entry:
        bp, it = self.base_of(idx)
        iv, props = self.entries[bp]
        if it:
            iv = iv.shifted(it * self.shift)
        return iv, props

    def unroll(self, count: int) -> list[Entry]:
        return [self.at(i) for i in range(count)]

    def to_text(self) -> str:
        lines = ["prefix:"]
        lines += [_entry_text(e) for e in self.prefix]
        lines.append(f"loop: shift={fmt_rat(self.shift)}")
        lines += [_entry_text(e) for e in self.loop]
        return "\n".join(lines) + "\n"


def _entry_text(e: Entry) -> str:
    iv, props = e
    return f"{iv} {{{','.join(sorted(props))}}}"


def make_trace(prefix: Sequence, loop: Sequence, shift) -> SuperDenseTrace:
    """Build a trace from ``(lo, hi, props)`` triples."""
    def conv(items):
        out = []
        for lo, hi, props in items:
            out.append((Interval(lo, hi), frozenset(props)))
        return tuple(out)
    return SuperDenseTrace(conv(prefix), conv(loop), to_fraction(shift))


# trace file format ----------------------------------------------------------

_RAT = r"\d+(?:/\d+|\.\d+)?"
_LINE_RE = re.compile(
    rf"^\s*(?P<open>[\[(])\s*(?P<a>{_RAT})\s*,\s*(?P<b>{_RAT})\s*(?P<close>[\])])\s*"
    r"\{(?P<props>[^{}]*)\}\s*$"
)
_LOOP_RE = re.compile(rf"^\s*loop:\s*shift\s*=\s*(?P<s>{_RAT})\s*$")


def parse_rational(s: str) -> Fraction:
    s = s.strip()
    if not re.fullmatch(_RAT, s):
        raise TraceError(f"not a non-negative rational: {s!r}")
    return Fraction(s)


def parse_trace(text: str) -> SuperDenseTrace:
    """Read the line format; a trailing ``run:`` section is ignored."""
    prefix: list[Entry] = []
    loop: list[Entry] = []
    shift = None
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "prefix:":
            if section is not None:
                raise TraceError(f"line {lineno}: 'prefix:' must come first")
            section = "prefix"
            continue
        m = _LOOP_RE.match(line)
        if m:
            if section != "prefix":
                raise TraceError(f"line {lineno}: 'loop:' must follow the prefix section")
            section = "loop"
            shift = parse_rational(m.group("s"))
            continue
        if line.startswith("run:"):
            break
        m = _LINE_RE.match(line)
        if not m or section is None:
            raise TraceError(f"line {lineno}: cannot parse {raw!r}")
        a, b = parse_rational(m.group("a")), parse_rational(m.group("b"))
        if m.group("open") == "[" and m.group("close") == "]":
            if a != b:
                raise TraceError(f"line {lineno}: closed intervals must be singletons")
            iv = Interval.point(a)
        elif m.group("open") == "(" and m.group("close") == ")":
            if not a < b:
                raise TraceError(f"line {lineno}: open interval needs a < b")
            iv = Interval.open(a, b)
        else:
            raise TraceError(f"line {lineno}: half-open intervals are not allowed")
        props = frozenset(p.strip() for p in m.group("props").split(",") if p.strip())
        (prefix if section == "prefix" else loop).append((iv, props))
    if shift is None:
        raise TraceError("missing 'loop: shift=...' header")
    return SuperDenseTrace(tuple(prefix), tuple(loop), shift)


# refinement -------------------------------------------------------------------

def _split_pieces(iv: Interval, cuts: Sequence[Fraction]) -> list[Interval]:
    out = []
    lo = iv.lo
    for c in cuts:
        out.append(Interval.open(lo, c))
        out.append(Interval.point(c))
        lo = c
    out.append(Interval.open(lo, iv.hi))
    return out


def refine_trace(trace: SuperDenseTrace, splits: Mapping[int, Iterable]) -> SuperDenseTrace:
    """Split open base intervals at the given points.

    Keys are base positions (prefix first, then loop); splits of a loop
    interval are given for its first copy and repeat in every iteration.
    """
    entries = trace.entries
    norm: dict[int, list[Fraction]] = {}
    for pos, pts in splits.items():
        pts = [to_fraction(p) for p in pts]
        if not pts:
            continue
        if not 0 <= pos < len(entries):
            raise TraceError(f"no base interval at position {pos}")
        iv = entries[pos][0]
        if iv.is_singleton:
            raise TraceError(f"cannot split singleton {iv}")
        if any(not iv.lo < p < iv.hi for p in pts):
            raise TraceError(f"split point outside {iv}")
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise TraceError("split points must be strictly ascending")
        norm[pos] = pts
    npre = len(trace.prefix)
    prefix, loop = [], []
    for pos, (iv, props) in enumerate(entries):
        pieces = _split_pieces(iv, norm[pos]) if pos in norm else [iv]
        target = prefix if pos < npre else loop
        target.extend((p, props) for p in pieces)
    return SuperDenseTrace(tuple(prefix), tuple(loop), trace.shift)


# evaluation -------------------------------------------------------------------

@dataclass
class _Work:
    """Mutable working lasso: refined intervals with their origins."""
    ivs: list[Interval]
    npre: int
    shift: Fraction
    origin: list[int]

    @property
    def nloop(self) -> int:
        return len(self.ivs) - self.npre

    def at(self, idx: int) -> tuple[Interval, int]:
        if idx < self.npre:
            return self.ivs[idx], idx
        it, k = divmod(idx - self.npre, self.nloop)
        iv = self.ivs[self.npre + k]
        return (iv.shifted(it * self.shift) if it else iv), self.npre + k


def _exists_in(iv: Interval, t: Fraction, rel: Rel, n: int) -> bool:
    """Is there a point t' of ``iv`` (all later than t) with t'-t rel n?"""
    if iv.is_singleton:
        return rel.holds(iv.lo - t, n)
    if rel.is_upper:
        return iv.lo - t < n
    return iv.hi - t > n


def _reach(work: _Work, hold: Callable[[int], bool], target: Callable[[int], bool],
           idx: int, t: Fraction, rel: Rel, n: int) -> bool:
    """Strict-future until: a later target point within the time guard,
    with ``hold`` at every point strictly in between."""
    iv, bp = work.at(idx)
    if not iv.is_singleton:
        if not hold(bp):
            return False
        if target(bp) and _exists_in(Interval(t, iv.hi), t, rel, n):
            return True
    limit = None
    j = idx + 1
    while True:
        iv, bp = work.at(j)
        if target(bp) and _exists_in(iv, t, rel, n):
            return iv.is_singleton or hold(bp)
        if not hold(bp):
            return False
        if rel.is_upper:
            gap = iv.hi - t
            if gap > n or (rel is Rel.LT and gap >= n):
                return False
        elif limit is None and iv.lo - t > n:
            limit = max(j, work.npre) + work.nloop
        if limit is not None and j >= limit:
            return False
        j += 1


def _split_points(work: _Work, n: int) -> dict[int, list[Fraction]]:
    """Candidate change points B - n for every open interval."""
    out: dict[int, list[Fraction]] = {}
    if n == 0:
        return out
    for pos, iv in enumerate(work.ivs):
        if iv.is_singleton:
            continue
        lo, hi = iv.lo + n, iv.hi + n
        pts = set()
        j = pos
        while True:
            jv, _ = work.at(j)
            if jv.lo >= hi:
                break
            for b in (jv.lo, jv.hi):
                if lo < b < hi:
                    pts.add(b - n)
            j += 1
        if pts:
            out[pos] = sorted(pts)
    return out


class TraceEvaluator:
    """Truth of every subformula of ``f`` on a refinement of ``trace``."""

    def __init__(self, trace: SuperDenseTrace, f: Formula):
        self.trace = trace
        self.formula = f
        self.table = subformula_order(f)
        work = _Work([iv for iv, _ in trace.entries], len(trace.prefix), trace.shift,
                     list(range(len(trace.entries))))
        props = [p for _, p in trace.entries]
        vals: dict[Formula, list[bool]] = {}
        for g in self.table:
            if g.is_temporal:
                splits = _split_points(work, g.bound)
                if splits:
                    work, vals, props = self._refine(work, vals, props, splits)
            vals[g] = self._evaluate(work, vals, props, g)
        self.work = work
        self.vals = vals
        self.props = props

    @staticmethod
    def _refine(work, vals, props, splits):
        ivs, origin, new_props, npre = [], [], [], 0
        remap: list[int] = []
        for pos, iv in enumerate(work.ivs):
            pieces = _split_pieces(iv, splits[pos]) if pos in splits else [iv]
            for p in pieces:
                remap.append(pos)
                ivs.append(p)
                origin.append(work.origin[pos])
                new_props.append(props[pos])
            if pos < work.npre:
                npre += len(pieces)
        new_vals = {g: [v[r] for r in remap] for g, v in vals.items()}
        return _Work(ivs, npre, work.shift, origin), new_vals, new_props

    def _evaluate(self, work, vals, props, g: Formula) -> list[bool]:
        op = g.op
        size = len(work.ivs)
        if op is Op.TRUE:
            return [True] * size
        if op is Op.FALSE:
            return [False] * size
        if op is Op.ATOM:
            return [g.name in props[k] for k in range(size)]
        if op is Op.NEG_ATOM:
            return [g.name not in props[k] for k in range(size)]
        if op is Op.NOT:
            a = vals[g.args[0]]
            return [not x for x in a]
        if op is Op.AND:
            a, b = vals[g.args[0]], vals[g.args[1]]
            return [x and y for x, y in zip(a, b)]
        if op is Op.OR:
            a, b = vals[g.args[0]], vals[g.args[1]]
            return [x or y for x, y in zip(a, b)]

        def always_true(_):
            return True

        if op is Op.UNTIL:
            a, b = vals[g.args[0]], vals[g.args[1]]
            hold, target, flip = a.__getitem__, b.__getitem__, False
        elif op is Op.EVENTUALLY:
            b = vals[g.args[0]]
            hold, target, flip = always_true, b.__getitem__, False
        elif op is Op.RELEASE:
            a, b = vals[g.args[0]], vals[g.args[1]]
            hold, target, flip = (lambda k: not a[k]), (lambda k: not b[k]), True
        elif op is Op.ALWAYS:
            b = vals[g.args[0]]
            hold, target, flip = always_true, (lambda k: not b[k]), True
        else:
            raise ValueError(f"unsupported operator {op}")
        out = []
        for pos, iv in enumerate(work.ivs):
            r = _reach(work, hold, target, pos, iv.sample(), g.rel, g.bound)
            out.append(r != flip)
        return out

    # queries ------------------------------------------------------------------

    def pieces_of(self, base_pos: int) -> list[int]:
        return [k for k, o in enumerate(self.work.origin) if o == base_pos]

    def value(self, g: Formula, point: Point) -> bool:
        iv, _ = self.trace.at(point.index)
        if not iv.contains(point.t):
            raise TraceError(f"time {point.t} is not in interval {point.index} = {iv}")
        bp, it = self.trace.base_of(point.index)
        t0 = point.t - it * self.trace.shift
        for k in self.pieces_of(bp):
            if self.work.ivs[k].contains(t0):
                return self.vals[g][k]
        raise AssertionError("refinement lost a point")

    def throughout(self, g: Formula, index: int) -> bool | None:
        """True/False if g is constant on interval ``index``, else None."""
        bp, _ = self.trace.base_of(index)
        seen = {self.vals[g][k] for k in self.pieces_of(bp)}
        return seen.pop() if len(seen) == 1 else None


@lru_cache(maxsize=256)
def evaluator(trace: SuperDenseTrace, f: Formula) -> TraceEvaluator:
    return TraceEvaluator(trace, f)


def evaluate_at(trace: SuperDenseTrace, f: Formula, point: Point | None = None) -> bool:
    """Exact truth of ``f`` at ``point`` (default: the origin <0,0>)."""
    if point is None:
        point = Point(0, Fraction(0))
    return evaluator(trace, f).value(f, point)


def satisfies(trace: SuperDenseTrace, f: Formula) -> bool:
    return evaluate_at(trace, f, Point(0, Fraction(0)))


def holds_throughout(trace: SuperDenseTrace, f: Formula, index: int) -> bool:
    return evaluator(trace, f).throughout(f, index) is True


def is_fine(trace: SuperDenseTrace, f: Formula) -> bool:
    """Every subformula has constant truth on every interval."""
    ev = evaluator(trace, f)
    for bp in range(len(trace.entries)):
        pieces = ev.pieces_of(bp)
        if len(pieces) == 1:
            continue
        for g in ev.table:
            if len({ev.vals[g][k] for k in pieces}) > 1:
                return False
    return True


def fineness_breakpoints(trace: SuperDenseTrace, f: Formula) -> dict[int, list[Fraction]]:
    """Points inside open base intervals where some subformula changes truth."""
    ev = evaluator(trace, f)
    out: dict[int, list[Fraction]] = {}
    for bp in range(len(trace.entries)):
        pieces = ev.pieces_of(bp)
        pts = []
        for a, s, b in zip(pieces, pieces[1:], pieces[2:]):
            if not ev.work.ivs[s].is_singleton:
                continue
            for g in ev.table:
                col = ev.vals[g]
                if not col[a] == col[s] == col[b]:
                    pts.append(ev.work.ivs[s].lo)
                    break
        if pts:
            out[bp] = pts
    return out


def make_fine(trace: SuperDenseTrace, f: Formula) -> SuperDenseTrace:
    return refine_trace(trace, fineness_breakpoints(trace, f))


def explain(trace: SuperDenseTrace, f: Formula) -> str:
    """Table of subformula truth per interval of the fine refinement."""
    fine = make_fine(trace, f)
    ev = evaluator(fine, f)
    subs = list(ev.table)
    lines = []
    for k, g in enumerate(subs):
        lines.append(f"#{k}: {g}")
    header = "interval".ljust(24) + " ".join(f"#{k}" for k in range(len(subs)))
    lines.append(header)
    for bp, (iv, props) in enumerate(fine.entries):
        tag = "loop " if bp >= len(fine.prefix) else ""
        cells = []
        for k, g in enumerate(subs):
            v = ev.throughout(g, bp)
            cells.append(("T" if v else "F").rjust(len(f"#{k}")))
        lines.append((tag + str(iv)).ljust(24) + " ".join(cells))
    return "\n".join(lines) + "\n"
