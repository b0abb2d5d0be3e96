"""SMT-LIB2 text for unrolled systems and a line-based solver session."""
from __future__ import annotations

import os
import re
import select
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .sts import (
    DELTA, STS, And, BVar, Const, EnumEq, Iff, Implies, Lin, Not, Or, Same,
)

DEFAULT_SOLVER = "z3 -in"


class SolverError(RuntimeError):
    pass


# names ----------------------------------------------------------------------

def sym(name: str) -> str:
    if "|" in name or "\\" in name:
        raise ValueError(f"name cannot be quoted: {name!r}")
    return f"|{name}|"


def bool_name(z: str, step: int) -> str:
    return f"{z}@{step}"


def enum_name(z: str, value, step: int) -> str:
    return f"{z}={value}@{step}"


def real_name(x: str, step: int) -> str:
    return f"!{x}@{step}" if x == DELTA else f"{x}@{step}"


def rat(q: Fraction) -> str:
    q = Fraction(q)
    body = f"{abs(q.numerator)}.0" if q.denominator == 1 else \
        f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    return f"(- {body})" if q < 0 else body


# terms ----------------------------------------------------------------------

def emit(t, cur: int, nxt: int) -> str:
    """SMT-LIB text of a term with current variables at step ``cur`` and
    primed ones at step ``nxt``."""
    if isinstance(t, Const):
        return "true" if t.value else "false"
    if isinstance(t, BVar):
        return sym(bool_name(t.name, nxt if t.nxt else cur))
    if isinstance(t, EnumEq):
        return sym(enum_name(t.name, t.value, nxt if t.nxt else cur))
    if isinstance(t, Same):
        raise TypeError("Same needs the variable sort; use emit_with")
    if isinstance(t, Lin):
        parts = []
        for (name, is_next), k in t.coeffs:
            v = sym(real_name(name, nxt if is_next else cur))
            parts.append(v if k == 1 else f"(* {rat(Fraction(k))} {v})")
        lhs = parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"
        return f"({t.rel} {lhs} {rat(t.const)})"
    if isinstance(t, Not):
        return f"(not {emit(t.arg, cur, nxt)})"
    if isinstance(t, And):
        return f"(and {' '.join(emit(a, cur, nxt) for a in t.args)})"
    if isinstance(t, Or):
        return f"(or {' '.join(emit(a, cur, nxt) for a in t.args)})"
    if isinstance(t, Implies):
        return f"(=> {emit(t.lhs, cur, nxt)} {emit(t.rhs, cur, nxt)})"
    if isinstance(t, Iff):
        return f"(= {emit(t.lhs, cur, nxt)} {emit(t.rhs, cur, nxt)})"
    raise TypeError(f"not a term: {t!r}")


class Emitter:
    """Knows variable sorts, so it can expand ``z' = z`` for enums."""

    def __init__(self, sts: STS):
        self.sts = sts

    def term(self, t, cur: int, nxt: int) -> str:
        if isinstance(t, Same):
            return self.same(t.name, cur, nxt)
        if isinstance(t, Not):
            return f"(not {self.term(t.arg, cur, nxt)})"
        if isinstance(t, And):
            return f"(and {' '.join(self.term(a, cur, nxt) for a in t.args)})"
        if isinstance(t, Or):
            return f"(or {' '.join(self.term(a, cur, nxt) for a in t.args)})"
        if isinstance(t, Implies):
            return f"(=> {self.term(t.lhs, cur, nxt)} {self.term(t.rhs, cur, nxt)})"
        if isinstance(t, Iff):
            return f"(= {self.term(t.lhs, cur, nxt)} {self.term(t.rhs, cur, nxt)})"
        return emit(t, cur, nxt)

    def same(self, z: str, a: int, b: int) -> str:
        dom = self.sts.zvars[z]
        if dom is None:
            return f"(= {sym(bool_name(z, b))} {sym(bool_name(z, a))})"
        eqs = [f"(= {sym(enum_name(z, v, b))} {sym(enum_name(z, v, a))})" for v in dom]
        return eqs[0] if len(eqs) == 1 else f"(and {' '.join(eqs)})"

    def declare_step(self, step: int) -> list[str]:
        out = []
        for z, dom in self.sts.zvars.items():
            if dom is None:
                out.append(f"(declare-fun {sym(bool_name(z, step))} () Bool)")
            else:
                names = [sym(enum_name(z, v, step)) for v in dom]
                out += [f"(declare-fun {n} () Bool)" for n in names]
                out.append(f"(assert {exactly_one(names)})")
        for x in self.sts.clocks + (DELTA,):
            n = sym(real_name(x, step))
            out.append(f"(declare-fun {n} () Real)")
            out.append(f"(assert (>= {n} 0.0))")
        return out

    def step_names(self, step: int) -> list[str]:
        out = []
        for z, dom in self.sts.zvars.items():
            if dom is None:
                out.append(bool_name(z, step))
            else:
                out += [enum_name(z, v, step) for v in dom]
        out += [real_name(x, step) for x in self.sts.clocks + (DELTA,)]
        return out


def exactly_one(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    at_least = f"(or {' '.join(names)})"
    at_most = [f"(not (and {a} {b}))" for i, a in enumerate(names) for b in names[i + 1:]]
    return f"(and {at_least} {' '.join(at_most)})"


def named(expr: str, label: str) -> str:
    return f"(assert (! {expr} :named {label}))"


# replies ----------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:(\()|(\))|(\|[^|]*\|)|(\"(?:[^\"]|\"\")*\")|([^\s()|\"]+))")


def parse_sexprs(text: str) -> list:
    out, stack, pos = [], [[]], 0
    text = text.strip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise SolverError(f"malformed solver reply near {text[pos:pos + 40]!r}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SolverError("unbalanced solver reply")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(m.group(3) or m.group(4) or m.group(5))
    if len(stack) != 1:
        raise SolverError("unbalanced solver reply")
    return stack[0]


def parse_value(v):
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise SolverError(f"cannot read value {v!r}") from None
    if len(v) == 2 and v[0] == "-":
        return -parse_value(v[1])
    if len(v) == 3 and v[0] == "/":
        return parse_value(v[1]) / parse_value(v[2])
    raise SolverError(f"cannot read value {v!r}")


def _balanced(text: str) -> bool:
    depth, quoted = 0, False
    for ch in text:
        if ch == "|":
            quoted = not quoted
        elif not quoted:
            depth += ch == "("
            depth -= ch == ")"
    return depth == 0 and not quoted


# sessions --------------------------------------------------------------------------

@dataclass
class SessionStats:
    checks: int = 0
    solve_time: float = 0.0
    last: str = ""


@dataclass
class SolverSession:
    command: str = DEFAULT_SOLVER
    timeout: float | None = None
    log: list[str] | None = None
    stats: SessionStats = field(default_factory=SessionStats)

    def __post_init__(self):
        self.proc = None
        self.depth = 0
        self.broken = False
        self._buf = b""

    def start(self):
        try:
            self.proc = subprocess.Popen(
                shlex.split(self.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT, bufsize=0)
        except OSError as e:
            raise SolverError(f"cannot start solver {self.command!r}: {e}") from None
        self.send("(set-option :print-success false)",
                  "(set-option :produce-models true)",
                  "(set-logic QF_LRA)")
        return self

    def __enter__(self):
        return self.start() if self.proc is None else self

    def __exit__(self, *exc):
        self.close()

    def _live(self):
        if self.broken:
            raise SolverError("solver session is unusable after an earlier error")
        if self.proc is None:
            self.start()

    def send(self, *lines: str):
        self._live()
        if self.log is not None:
            self.log.extend(lines)
        data = ("\n".join(lines) + "\n").encode()
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail("solver closed its input")

    def _fail(self, msg: str):
        self.broken = True
        code = self.proc.poll() if self.proc else None
        if code is not None:
            msg += f" (exit status {code})"
        raise SolverError(msg)

    def _read_line(self, deadline) -> str:
        while b"\n" not in self._buf:
            wait = None if deadline is None else max(0.0, deadline - time.monotonic())
            ready, _, _ = select.select([self.proc.stdout], [], [], wait)
            if not ready:
                raise TimeoutError
            chunk = os.read(self.proc.stdout.fileno(), 65536)
            if not chunk:
                self._fail("solver terminated unexpectedly")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode()

    def _read_reply(self, deadline) -> str:
        text = self._read_line(deadline)
        while not _balanced(text):
            text += "\n" + self._read_line(deadline)
        return text.strip()

    def check(self) -> str:
        """Returns ``sat``, ``unsat`` or ``unknown``; a timeout gives ``unknown``."""
        self.send("(check-sat)")
        t0 = time.monotonic()
        deadline = None if self.timeout is None else t0 + self.timeout
        try:
            while True:
                reply = self._read_reply(deadline)
                if reply in ("sat", "unsat", "unknown"):
                    break
                if reply.startswith("(error"):
                    self._fail(f"solver error: {reply}")
                if reply:
                    self._fail(f"unexpected solver reply: {reply[:200]}")
        except TimeoutError:
            self.stats.solve_time += time.monotonic() - t0
            self.stats.last = "timeout"
            self.close()
            self.broken = True
            return "unknown"
        self.stats.checks += 1
        self.stats.solve_time += time.monotonic() - t0
        self.stats.last = reply
        return reply

    def get_values(self, names: Iterable[str]) -> dict[str, object]:
        names = list(names)
        out: dict[str, object] = {}
        for i in range(0, len(names), 500):
            chunk = names[i:i + 500]
            self.send(f"(get-value ({' '.join(sym(n) for n in chunk)}))")
            try:
                reply = self._read_reply(None)
            except TimeoutError:  # pragma: no cover - no deadline here
                self._fail("timeout while reading model")
            if reply.startswith("(error"):
                self._fail(f"solver error: {reply}")
            parsed = parse_sexprs(reply)
            if len(parsed) != 1 or not isinstance(parsed[0], list):
                self._fail(f"malformed model reply: {reply[:200]}")
            for pair in parsed[0]:
                if not isinstance(pair, list) or len(pair) != 2 or not isinstance(pair[0], str):
                    self._fail(f"malformed model entry: {pair!r}")
                key = pair[0][1:-1] if pair[0].startswith("|") else pair[0]
                out[key] = parse_value(pair[1])
        missing = [n for n in names if n not in out]
        if missing:
            self._fail(f"model lacks values for {missing[:5]}")
        return out

    def push(self):
        self.send("(push 1)")
        self.depth += 1

    def pop(self):
        if self.depth == 0:
            raise SolverError("pop without matching push")
        self.send("(pop 1)")
        self.depth -= 1

    def close(self):
        if self.proc is not None:
            try:
                if self.proc.poll() is None:
                    try:
                        self.proc.stdin.write(b"(exit)\n")
                        self.proc.stdin.flush()
                    except OSError:
                        pass
                    try:
                        self.proc.wait(timeout=2)
                    except subprocess.TimeoutExpired:
                        self.proc.kill()
                        self.proc.wait()
            finally:
                for f in (self.proc.stdin, self.proc.stdout):
                    try:
                        f.close()
                    except OSError:
                        pass
                self.proc = None
