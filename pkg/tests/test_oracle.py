import itertools
import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdasp import Const, Literal, NafNot, Pos, Program, Rule, check_answer, ground, parse_program, stable_models
from gdasp.errors import TooLargeError, UngroundableError
from gdasp.oracle import MAX_ATOMS, holds_somewhere, least_model, models_of
from randprog import propositional

TWEETY = """
bird(tweety).     flies(tweety).     bird(pengu).      penguin(pengu).     -flies(pengu).
flies(X) :- bird(X), not ab(X).                        ab(X) :- penguin(X).
"""


def L(name, *args, neg=False):
    return Literal(name, tuple(Const(a) for a in args), neg)


def model_names(ms):
    return sorted(sorted(str(a.predicate) for a in m) for m in ms)


# -- grounding


def test_ground_tweety_over_both_constants():
    gp = ground(parse_program(TWEETY))
    assert sorted(map(str, gp.universe)) == ["pengu", "tweety"]
    atoms = set(gp.atoms)
    assert {L("ab", "pengu"), L("flies", "pengu"), L("flies", "pengu", neg=True)} <= atoms
    assert gp.complements


def test_ground_propositional_keeps_rules():
    gp = ground(parse_program("p :- not q. q :- not p. r :- p, q."))
    idx = gp.index()
    p, q, r = idx[L("p")], idx[L("q")], idx[L("r")]
    assert sorted(gp.rules, key=repr) == sorted(
        [(p, frozenset(), frozenset({q})), (q, frozenset(), frozenset({p})), (r, frozenset({p, q}), frozenset())], key=repr
    )


def test_mortgage_is_ungroundable(corpus_dir):
    with pytest.raises(UngroundableError):
        ground(parse_program((corpus_dir / "mortgage.gdasp").read_text()))


def test_function_symbols_are_ungroundable():
    with pytest.raises(UngroundableError):
        ground(parse_program("p(f(a))."))


def test_ground_disequality_evaluated():
    ms = models_of(parse_program("q(a). q(b). r(X, Y) :- q(X), q(Y), X \\= Y."))
    (m,) = ms
    assert L("r", "a", "b") in m and L("r", "a", "a") not in m


# -- stable models


def test_two_worlds():
    assert model_names(models_of(parse_program("p :- not q. q :- not p."))) == [["p"], ["q"]]


def test_positive_loop_gives_empty_model():
    assert models_of(parse_program("p :- p.")) == [frozenset()]


def test_tweety_model():
    (m,) = models_of(parse_program(TWEETY))
    assert {L("flies", "tweety"), L("ab", "pengu"), L("flies", "pengu", neg=True)} <= m
    assert L("flies", "pengu") not in m


def test_odd_loop_has_no_model():
    assert models_of(parse_program("p :- not p.")) == []


def test_complementary_pair_rejected():
    assert models_of(parse_program("p. -p.")) == []


def test_too_large():
    src = " ".join(f"a{i} :- not b{i}. b{i} :- not a{i}." for i in range(MAX_ATOMS // 2 + 1))
    with pytest.raises(TooLargeError):
        models_of(parse_program(src))


def test_least_model():
    assert least_model([(0, frozenset()), (1, frozenset({0})), (2, frozenset({3}))]) == {0, 1}


# -- check_answer


def _answer(*goals):
    return SimpleNamespace(model=goals)


TWO = [frozenset({L("p")}), frozenset({L("q")})]


def test_check_answer_pass_with_witness():
    v = check_answer(_answer(Pos(L("p")), NafNot(L("q"))), TWO)
    assert v and v.witness == frozenset({L("p")})


def test_check_answer_fail():
    assert not check_answer(_answer(Pos(L("p")), Pos(L("q"))), TWO)


def test_check_answer_vacuous():
    assert check_answer(_answer(), TWO)
    assert not check_answer(_answer(), [])


def test_holds_somewhere():
    assert holds_somewhere(TWO, Pos(L("p")))
    assert holds_somewhere(TWO, NafNot(L("p")))
    assert not holds_somewhere(TWO, Pos(L("r")))


# -- properties


def _naive_stable_models(prog: Program, atoms):
    # every subset of atoms, checked directly against the reduct
    rules = [(r.head, r.body) for r in prog.rules]
    out = []
    for bits in itertools.product([False, True], repeat=len(atoms)):
        m = {Literal(a) for a, b in zip(atoms, bits) if b}
        reduct = [
            (h, [g.literal for g in body if isinstance(g, Pos)])
            for h, body in rules
            if not any(isinstance(g, NafNot) and g.literal in m for g in body)
        ]
        lm, changed = set(), True
        while changed:
            changed = False
            for h, pos in reduct:
                if h is not None and h not in lm and all(p in lm for p in pos):
                    lm.add(h)
                    changed = True
        if lm != m:
            continue
        if any(h is None and all(p in lm for p in pos) for h, pos in reduct):
            continue
        out.append(frozenset(m))
    return sorted(out, key=lambda s: sorted(map(repr, s)))


def _sorted(ms):
    return sorted(ms, key=lambda s: sorted(map(repr, s)))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_naive_enumeration(seed):
    prog, atoms = propositional(random.Random(seed), max_atoms=6)
    assert _sorted(stable_models(ground(prog))) == _naive_stable_models(prog, atoms)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_negation_free_has_one_least_model(seed):
    prog, atoms = propositional(random.Random(seed), max_neg=0)
    prog = Program([r for r in prog.rules if r.head is not None] or [Rule(Literal(atoms[0]), (), 1)])
    ms = stable_models(ground(prog))
    assert len(ms) == 1
    assert ms == _naive_stable_models(prog, atoms)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_constraint_never_adds_models(seed, data):
    rng = random.Random(seed)
    prog, atoms = propositional(rng)
    body = data.draw(st.lists(st.sampled_from(atoms), min_size=1, max_size=2))
    neg = data.draw(st.booleans())
    goals = tuple(NafNot(Literal(a)) if neg and i == 0 else Pos(Literal(a)) for i, a in enumerate(body))
    more = Program(prog.rules + [Rule(None, goals, len(prog.rules) + 1)])
    before = set(stable_models(ground(prog)))
    after = set(stable_models(ground(more)))
    assert after <= before
