import sys
from dataclasses import replace
from fractions import Fraction as Q
from pathlib import Path

import pytest
import z3

from mitlbmc.bmc import (
    HEADER, check_network, emit_smtlib, prepare, solve_at, solve_incremental,
    unroll, witness_problems,
)
from mitlbmc.encoder import output_var
from mitlbmc.formula import parse_mitl, subformula_order
from mitlbmc.sts import StsState
from mitlbmc.ta import check_run, fischer_model, parse_network
from mitlbmc.traces import satisfies

from support import merge_elapses, witness_run

DATA = Path(__file__).parent / "data"


def three_loc():
    return parse_network((DATA / "three_loc.ta").read_text())


@pytest.mark.parametrize("model, first", [
    ("automaton A { init a; loc a; }", 2),
    # the lone clock must pass its maximum before the loop can close
    ("clock c; automaton A { init a; loc a; }", 3),
])
def test_smallest_satisfiable_bound(model, first):
    p = prepare(parse_network(model), parse_mitl("true"))
    answers = [solve_at(p.sts, k, p.formula) for k in range(1, first + 2)]
    assert answers == ["unsat"] * (first - 1) + ["sat", "sat"]
    v = solve_incremental(p.sts, 5, p.formula)
    assert v.status == "witness" and v.bound == first


def test_unsatisfiable_goal_gives_no_trace():
    v = check_network(three_loc(), parse_mitl("false"), max_bound=6)
    assert v.status == "no-trace" and v.bound == 6 and v.witness is None
    assert [r for _, r, _ in v.stats["bounds"]] == ["unsat"] * 6


def test_three_loc_reaches_l3():
    net = three_loc()
    f = parse_mitl("F @A.l3")
    v = check_network(net, f, max_bound=12)
    assert v.status == "witness"
    w = v.witness
    assert satisfies(w.trace, prepare(net, f).formula)
    assert any(s.z["at_A"] == "l3" for s in w.states)
    assert check_run(net, merge_elapses(net, witness_run(net, w))) == []


def test_three_loc_staying_in_l1_is_impossible():
    v = check_network(three_loc(), parse_mitl("G @A.l1"), max_bound=10)
    assert v.status == "no-trace"


@pytest.mark.parametrize("text", [
    "F[<=2] @A.l2", "F[>6] @A.l3", "@A.l1 U[>=2] @A.l2", "G[<=3] !@A.l3", "@A.l2 R[>1] !@A.l3",
])
def test_three_loc_timed_witnesses_are_valid(text):
    net = three_loc()
    v = check_network(net, parse_mitl(text), max_bound=10)
    assert v.status == "witness"
    assert satisfies(v.witness.trace, prepare(net, parse_mitl(text)).formula)


def test_witness_alternates_and_is_non_zeno():
    v = check_network(parse_network(fischer_model(2)), parse_mitl("G F crit1 & G F idle"),
                      max_bound=15)
    assert v.status == "witness"
    w = v.witness
    for i in range(w.k + 1):
        assert not (w.deltas[i] > 0 and w.deltas[i + 1] > 0)
    assert sum(w.deltas[w.loop:w.k + 1]) > 0
    loop_states = w.states[w.loop:w.k + 1]
    # fairness: both recurrences happen inside the loop
    assert any(s.z["at_P1"] == "cs" for s in loop_states)
    assert any(s.z["at_P1"] == "idle" for s in loop_states)


def test_fischer_witness_is_a_network_run():
    net = parse_network(fischer_model(2))
    v = check_network(net, parse_mitl("F crit & F[>3] idle"), max_bound=20)
    assert v.status == "witness"
    run = merge_elapses(net, witness_run(net, v.witness))
    assert check_run(net, run) == []


def test_mutual_exclusion_holds_up_to_bound():
    v = check_network(parse_network(fischer_model(2)), parse_mitl("F crit2way"), max_bound=12)
    assert v.status == "no-trace"


def test_corrupted_witness_is_rejected():
    net = three_loc()
    f = parse_mitl("F @A.l3")
    p = prepare(net, f)
    v = solve_incremental(p.sts, 12, p.formula, names=p.names)
    w = v.witness
    assert witness_problems(w, p.formula, p.sts) == []
    bad = replace(w, states=list(w.states))
    s = bad.states[1]
    bad.states[1] = StsState({**s.z, "at_A": "l3"}, s.x)
    assert witness_problems(bad, p.formula, p.sts)
    bad2 = replace(w, deltas=list(w.deltas))
    bad2.deltas[0] = Q(1)
    assert witness_problems(bad2, p.formula, p.sts)


def test_incremental_agrees_with_fresh_sessions():
    net = three_loc()
    p = prepare(net, parse_mitl("F[>6] @A.l3"))
    v = solve_incremental(p.sts, 10, p.formula, names=p.names)
    assert v.status == "witness"
    fresh = [(k, solve_at(p.sts, k, p.formula)) for k in range(1, v.bound + 1)]
    assert fresh == [(k, r) for k, r, _ in v.stats["bounds"]]


def test_region_closure_also_finds_valid_witnesses():
    net = parse_network(fischer_model(2))
    p = prepare(net, parse_mitl("G F crit1"))
    v = solve_incremental(p.sts, 15, p.formula, names=p.names, closure="region")
    assert v.status == "witness"
    assert witness_problems(v.witness, p.formula, p.sts) == []


def test_emitted_script_is_standalone_and_deterministic():
    p = prepare(three_loc(), parse_mitl("F @A.l3"))
    goal = output_var(len(subformula_order(p.formula)) - 1)
    a = emit_smtlib(unroll(p.sts, 3, goal))
    b = emit_smtlib(unroll(p.sts, 3, goal))
    assert a == b
    assert a.splitlines()[:3] == HEADER and a.rstrip().endswith("(check-sat)")
    s = z3.Solver()
    s.from_string(a.replace("(check-sat)", ""))
    assert s.check() in (z3.sat, z3.unsat)
    with pytest.raises(ValueError):
        unroll(p.sts, 0)


def test_unknown_answer_is_reported(tmp_path):
    stub = tmp_path / "unknown.py"
    stub.write_text("import sys\nfor line in sys.stdin:\n"
                    "    if 'check-sat' in line:\n        print('unknown', flush=True)\n")
    p = prepare(three_loc(), parse_mitl("F @A.l3"))
    v = solve_incremental(p.sts, 5, p.formula, solver=f"{sys.executable} {stub}")
    assert v.status == "unknown" and v.bound == 1
