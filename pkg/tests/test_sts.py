import random
from fractions import Fraction as Q
from pathlib import Path

import pytest

from mitlbmc.sts import (
    DELTA, FALSE, STS, And, BVar, EnumEq, Implies, Lin, Or, Same, SortError, StsState, U0, UP,
    atoms, check_wellformed, clock_advance, clock_cmp, clock_delta_cmp, clock_reset, delta_cmp,
    dump, eval_ap, eval_state, eval_step, loc_var, run_steps, state_of, translate_network,
)
from mitlbmc.ta import (
    NetState, elapse, enabled_edges, fire, fischer_model, is_step, is_valid, parse_network,
    random_run,
)

DATA = Path(__file__).parent / "data"


def three_loc():
    return parse_network((DATA / "three_loc.ta").read_text())


def tiny(**kw):
    base = dict(zvars={"p": None, "m": ("a", "b")}, clocks=("x", "y"))
    base.update(kw)
    return STS(**base)


# well-formedness ---------------------------------------------------------------

@pytest.mark.parametrize("atom, ok", [
    (clock_reset("x"), True),
    (clock_advance("x"), True),
    (clock_cmp("x", "<", 3), True),
    (clock_delta_cmp("x", "<=", 5), True),
    (delta_cmp(">"), True),
    (Lin(((("x", True), 1), (("y", False), -1)), "=", Q(0)), False),   # x' = y
    (Lin(((("x", False), 1), (("y", False), -1)), "<", Q(0)), False),  # x < y
    (Lin(((("x", False), 2),), "<", Q(3)), False),
    (Lin(((("x", False), 1),), "<", Q(3, 2)), False),
    (Lin(((("x", False), 1),), "<", Q(-1)), False),
    (Lin((((DELTA, False), 1),), ">", Q(1)), False),
    (Lin(((("x", True), 1),), "=", Q(2)), False),
])
def test_atom_shapes_in_transition(atom, ok):
    violations = check_wellformed(tiny(trans=atom))
    assert (violations == []) == ok, violations


def test_next_state_and_delta_only_in_transition():
    assert check_wellformed(tiny(init=BVar("p", True)))
    assert check_wellformed(tiny(inv=clock_reset("x")))
    assert check_wellformed(tiny(init=delta_cmp("=")))
    assert check_wellformed(tiny(init=Same("p")))
    assert check_wellformed(tiny(inv=clock_cmp("x", "<=", 4))) == []


def test_sort_misuse_is_reported():
    assert check_wellformed(tiny(init=BVar("m")))
    assert check_wellformed(tiny(init=EnumEq("p", "a")))
    assert check_wellformed(tiny(init=EnumEq("m", "c")))
    assert check_wellformed(tiny(init=BVar("ghost")))
    assert check_wellformed(tiny(fair=(clock_cmp("x", ">", 1),)))
    assert check_wellformed(tiny(ap={"q": clock_cmp("x", ">", 1)}))
    assert check_wellformed(tiny(open_var="m"))


def test_sort_error_on_evaluation():
    sts = tiny()
    good = StsState({"p": True, "m": "a"}, {"x": Q(0), "y": Q(0)})
    assert eval_state(sts, "I", good)
    with pytest.raises(SortError):
        eval_state(sts, "I", StsState({"p": "a", "m": "a"}, {"x": Q(0), "y": Q(0)}))
    with pytest.raises(SortError):
        eval_state(sts, "INV", StsState({"p": True}, {"x": Q(0), "y": Q(0)}))
    with pytest.raises(SortError):
        eval_state(sts, "I", StsState({"p": True, "m": "z"}, {"x": Q(0), "y": Q(0)}))
    with pytest.raises(ValueError):
        StsState({}, {"x": Q(-1)})


# translation ----------------------------------------------------------------------

def test_three_loc_translation_shape():
    sts = translate_network(three_loc())
    assert check_wellformed(sts) == []
    assert sts.zvars[loc_var("A")] == ("l1", "l2", "l3")
    assert sts.zvars[U0] is None and sts.zvars[UP] is None
    assert sts.open_var == UP
    assert sts.clocks == ("c1", "c2")
    assert sts.inv == Implies(EnumEq("at_A", "l1"), clock_cmp("c1", "<", 5))

    discrete = [t for t in sts.trans.args
                if isinstance(t, Implies) and t.lhs == And((BVar(U0), BVar(U0, True)))]
    (d,) = discrete
    assert isinstance(d.rhs, Or) and len(d.rhs.args) == 2
    first = set(d.rhs.args[0].args)
    assert first == {EnumEq("at_A", "l1"), EnumEq("at_A", "l2", True), clock_cmp("c2", ">=", 1),
                     clock_advance("c1"), clock_reset("c2")}
    second = set(d.rhs.args[1].args)
    assert second == {EnumEq("at_A", "l2"), EnumEq("at_A", "l3", True),
                      clock_advance("c1"), clock_advance("c2")}


def test_automaton_without_edges_has_empty_discrete_part():
    net = parse_network("clock c; automaton A { init a; loc a; }")
    sts = translate_network(net)
    discrete = [t for t in sts.trans.args
                if isinstance(t, Implies) and t.lhs == And((BVar(U0), BVar(U0, True)))]
    assert discrete[0].rhs == FALSE


def test_dump_is_deterministic():
    a = dump(translate_network(parse_network(fischer_model(3))))
    b = dump(translate_network(parse_network(fischer_model(3))))
    assert a == b and "(open up)" in a


@pytest.mark.parametrize("n", [2, 3, 4])
def test_fischer_translation_is_wellformed(n):
    net = parse_network(fischer_model(n))
    assert check_wellformed(translate_network(net)) == []


def test_reserved_name_clash():
    net = parse_network("var up : 0..1 = 0; automaton A { init a; loc a; }")
    with pytest.raises(ValueError):
        translate_network(net)


# steps ----------------------------------------------------------------------------------

def three_loc_states():
    def s(loc, c1, c2, d):
        return state_of(three_loc(), NetState((loc,), (), (Q(c1), Q(c2))), Q(d))
    return s


def test_three_loc_hand_steps():
    net = three_loc()
    sts = translate_network(net)
    s = three_loc_states()
    # a singleton followed by the open interval after it
    assert eval_step(sts, s("l1", 0, 0, 0), 0, s("l1", 0, 0, "3.5"))
    # the open interval ends in a singleton with advanced clocks
    assert eval_step(sts, s("l1", 0, 0, "3.5"), Q("3.5"), s("l1", "3.5", "3.5", 0))
    assert not eval_step(sts, s("l1", 0, 0, "3.5"), Q("3.5"), s("l1", "3.5", "3", 0))
    # discrete edge with reset
    assert eval_step(sts, s("l1", "3.5", "3.5", 0), 0, s("l2", "3.5", 0, 0))
    assert not eval_step(sts, s("l1", "0.5", "0.5", 0), 0, s("l2", "0.5", 0, 0))
    # two open intervals never follow each other
    assert not eval_step(sts, s("l1", 0, 0, 1), 1, s("l1", 1, 1, 1))
    # location may not change while time passes
    assert not eval_step(sts, s("l1", 0, 0, 1), 1, s("l2", 1, 1, 0))
    # open marker must agree with the duration
    assert not eval_step(sts, s("l1", 0, 0, 0), 1, s("l1", 1, 1, 0))
    assert eval_state(sts, "I", s("l1", 0, 0, 0))
    assert not eval_state(sts, "I", s("l1", 0, 0, 1))
    assert not eval_state(sts, "INV", s("l1", 5, 0, 0))


def test_propositions_follow_locations():
    net = three_loc()
    sts = translate_network(net, ["@l1", "@A.l3"])
    s = three_loc_states()
    assert eval_ap(sts, "@l1", s("l1", 0, 0, 0))
    assert not eval_ap(sts, "@A.l3", s("l1", 0, 0, 0))
    assert eval_ap(sts, "@A.l3", s("l3", 0, 0, 1))


def _mode_state(net, ns, d):
    return state_of(net, ns, d)


def _oracle_step(net, ns, sd, d, nt, td):
    # direct reading of the network semantics on (state, duration) pairs
    if sd > 0 and td > 0:
        return False
    if (sd == 0) != (d == 0) or sd != d:
        return False
    if not (is_valid(net, ns) and is_valid(net, nt)):
        return False
    if sd == 0 and td == 0:
        return is_step(net, ns, Q(0), nt)
    if sd == 0:
        return nt == ns
    return nt == elapse(ns, d)


def _random_state(net, rng):
    vals = [Q(rng.randint(0, 6), 2) for _ in net.clocks]
    locs = tuple(rng.choice(a.locations) for a in net.automata)
    vs = tuple(rng.randint(0, v.upper) for v in net.variables)
    return NetState(locs, vs, tuple(vals))


def _successor_candidate(net, ns, rng):
    choice = rng.random()
    if choice < 0.4:
        edges = enabled_edges(net, ns)
        if edges:
            i, e = rng.choice(edges)
            return fire(net, ns, i, e), Q(0)
    if choice < 0.8:
        d = Q(rng.randint(1, 4), 2)
        return elapse(ns, d), d
    return _random_state(net, rng), Q(rng.randint(0, 2), 2)


@pytest.mark.parametrize("model", ["three_loc", "fischer2"])
def test_sampled_steps_match_network_semantics(model):
    net = three_loc() if model == "three_loc" else parse_network(fischer_model(2))
    sts = translate_network(net)
    rng = random.Random(11)
    agree = true_count = 0
    for _ in range(5000):
        ns = _random_state(net, rng)
        nt, d = _successor_candidate(net, ns, rng)
        sd = rng.choice([Q(0), d]) if d > 0 else Q(0)
        if sd > 0:
            td = Q(0)
        elif d == 0 and rng.random() < 0.5:
            # singleton followed by its own open interval
            nt, td = ns, Q(rng.randint(1, 4), 2)
        else:
            td = Q(0) if rng.random() < 0.7 else Q(1, 2)
        s, t = state_of(net, ns, sd), state_of(net, nt, td)
        got = (eval_step(sts, s, sd, t) and eval_state(sts, "INV", s)
               and eval_state(sts, "INV", t))
        want = _oracle_step(net, ns, sd, sd, nt, td)
        assert got == want, (ns, sd, nt, td)
        agree += 1
        true_count += want
    assert true_count > 500


@pytest.mark.parametrize("n", [2, 3])
def test_runs_translate_to_step_sequences(n):
    net = parse_network(fischer_model(n))
    sts = translate_network(net)
    for seed in range(30):
        steps = run_steps(net, random_run(net, 30, seed))
        s0 = steps[0][0]
        assert eval_state(sts, "I", s0)
        for (s, d), (t, _) in zip(steps, steps[1:]):
            assert eval_state(sts, "INV", s)
            assert eval_step(sts, s, d, t), (seed, s, d, t)


def test_every_step_is_either_discrete_or_elapse():
    sts = translate_network(three_loc())
    names = {a.name for a in atoms(sts.trans) if isinstance(a, (BVar,))}
    assert names == {U0, UP}
