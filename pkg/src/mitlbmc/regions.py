"""Clock regions: the finite quotient that makes lasso search complete."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .sts import (
    STS, BVar, EnumEq, Iff, Implies, Lin, Same, StsState, atom_shape, atoms, conj, disj,
)


def clock_maxima(sts: STS) -> dict[str, int]:
    """Largest constant compared against each clock anywhere in the system."""
    out = {x: 0 for x in sts.clocks}
    for t in (sts.init, sts.inv, sts.trans):
        for a in atoms(t):
            if isinstance(a, Lin) and atom_shape(a) in ("clock~n", "clock+delta~n"):
                (x, _), = [s for s, _ in a.coeffs if s[0] in out]
                out[x] = max(out[x], int(a.const))
    return out


@dataclass(frozen=True)
class RegionDescriptor:
    z: tuple
    # per clock: (above max, integer part or None, fraction is zero)
    clocks: tuple[tuple[str, bool, int | None, bool], ...]
    # clocks at or below their maximum grouped by equal fractional part,
    # in increasing order of that part
    order: tuple[tuple[str, ...], ...]


def region_of(state: StsState, maxima: Mapping[str, int]) -> RegionDescriptor:
    clocks = []
    fracs: dict[Fraction, list[str]] = {}
    for x in sorted(maxima):
        v = state.x[x]
        if v < 0:
            raise ValueError(f"negative clock value for {x}")
        if v > maxima[x]:
            clocks.append((x, True, None, False))
            continue
        ip = math.floor(v)
        fr = v - ip
        clocks.append((x, False, ip, fr == 0))
        fracs.setdefault(fr, []).append(x)
    order = tuple(tuple(sorted(fracs[f])) for f in sorted(fracs))
    return RegionDescriptor(tuple(sorted(state.z.items())), tuple(clocks), order)


def same_region(s: StsState, t: StsState, maxima: Mapping[str, int]) -> bool:
    return region_of(s, maxima) == region_of(t, maxima)


def _at(x: str, b: bool, rel: str, n) -> Lin:
    return Lin((((x, b), 1),), rel, Fraction(n))


def _diff(x: str, y: str, b: bool, cx: int, cy: int) -> Lin:
    # x - cx <= y - cy
    return Lin((((x, b), 1), ((y, b), -1)), "<=", Fraction(cx - cy))


def same_region_constraint(sts: STS, maxima: Mapping[str, int]):
    """Formula over two states (current and next copy) that holds iff they are
    region equivalent. The next copy plays the second state."""
    parts = []
    for name in sts.zvars:
        parts.append(Same(name))
    clocks = sorted(maxima)
    for x in clocks:
        m = maxima[x]
        for c in range(m + 1):
            parts.append(Iff(_at(x, False, "<", c), _at(x, True, "<", c)))
            parts.append(Iff(_at(x, False, "=", c), _at(x, True, "=", c)))
        parts.append(Iff(_at(x, False, ">", m), _at(x, True, ">", m)))
    for i, x in enumerate(clocks):
        for y in clocks[i + 1:]:
            for cx in range(maxima[x]):
                for cy in range(maxima[y]):
                    cell = conj(_at(x, False, ">=", cx), _at(x, False, "<", cx + 1),
                                _at(y, False, ">=", cy), _at(y, False, "<", cy + 1))
                    parts.append(Implies(cell, conj(
                        Iff(_diff(x, y, False, cx, cy), _diff(x, y, True, cx, cy)),
                        Iff(_diff(y, x, False, cy, cx), _diff(y, x, True, cy, cx)),
                    )))
    return conj(*parts)


def _fubini(n: int) -> int:
    # ordered set partitions
    a = [1]
    for m in range(1, n + 1):
        a.append(sum(math.comb(m, k) * a[m - k] for k in range(1, m + 1)))
    return a[n]


def region_count(maxima: Mapping[str, int]) -> int:
    """Exact number of clock regions.

    A clock is either at an integer value up to its maximum, above it, or
    strictly between two integers below it. The clocks of the last kind are
    ordered by their fractional parts (ties allowed), which gives an ordered
    set partition.
    """
    poly = [1]
    for m in maxima.values():
        nxt = [0] * (len(poly) + 1)
        for k, coef in enumerate(poly):
            nxt[k] += coef * (m + 2)
            nxt[k + 1] += coef * m
        poly = nxt
    return sum(coef * _fubini(k) for k, coef in enumerate(poly))


def completeness_bound(sts: STS, maxima: Mapping[str, int] | None = None) -> int:
    if maxima is None:
        maxima = clock_maxima(sts)
    return (len(sts.clocks) + len(sts.fair) + 2) * sts.value_count() * region_count(maxima)
