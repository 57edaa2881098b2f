import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdasp import (
    Const,
    Forall,
    Literal,
    NafNot,
    Pos,
    ProgramError,
    Rel,
    Var,
    count_models,
    desugar_abducibles,
    dualize,
    ground,
    negate_builtin,
    parse_program,
    parse_query,
    print_rule,
    solve,
    stable_models,
)
from gdasp.dual import negate
from gdasp.errors import TooLargeError, UngroundableError
from gdasp.printer import Printer, VarNamer
from randprog import corpus_programs

REL_OPS = ["=", "\\=", "<", "=<", ">", ">="]


def canon(r):
    return Printer(VarNamer(anonymize=True)).rule(r)


# -- abducibles


def test_desugar_propositional():
    rules = desugar_abducibles(parse_program("#abducible p."))
    assert [print_rule(r) for r in rules] == ["p :- not neg_p.", "neg_p :- not p."]


def test_desugar_none():
    assert desugar_abducibles(parse_program("p.")) == []


def test_desugar_unary_two_models_per_constant():
    p = parse_program("#abducible q/1. r(c).")
    rules = desugar_abducibles(p)
    assert [canon(r) for r in rules] == ["q(_G1) :- not neg_q(_G1).", "neg_q(_G1) :- not q(_G1)."]
    models = stable_models(ground(p))
    assert sorted(sorted(map(str, (l.predicate for l in m if l.predicate == "q"))) for m in models) == [[], ["q"]]


def test_abducible_with_rules_rejected():
    with pytest.raises(ProgramError):
        dualize(parse_program("#abducible p. p :- q."))


# -- negation of goals


@given(st.sampled_from(REL_OPS))
def test_negate_builtin_is_involution(op):
    g = Rel(op, Var("A"), Var("B"))
    assert negate_builtin(negate_builtin(g)) == g
    assert negate_builtin(g).op != op


def test_negate_builtin_examples():
    a, b = Var("A"), Var("B")
    assert negate_builtin(Rel("<", a, b)) == Rel(">=", a, b)
    assert negate_builtin(Rel("=", a, Const("3"))).op == "\\="
    assert negate_builtin(Rel(">", a, b)).op == "=<"


def test_negate_literals_is_involution():
    lit = Literal("p", (Var("X"),))
    assert negate(Pos(lit)) == NafNot(lit)
    assert negate(negate(Pos(lit))) == Pos(lit)
    assert negate(negate(NafNot(lit))) == NafNot(lit)


# -- dual rule shapes


def test_flies_dual_shape():
    dp = dualize(parse_program("bird(tweety). flies(X) :- bird(X)."))
    text = [canon(r) for r in dp.dual_rules]
    assert "not_flies(_G1) :- not_flies_1(_G1)." in text
    assert "not_flies_1(_G1) :- not bird(_G1)." in text
    assert "not_bird_1(_G1) :- _G1 \\= tweety." in text


def test_flies_negative_query_constraint():
    p = parse_program("bird(tweety). flies(X) :- bird(X).")
    (ans,) = solve(p, parse_query("?- not flies(V)."))
    assert ans.residue_lines() == ["V \\= tweety"]


def test_bachelor_dual_has_nested_forall():
    dp = dualize(parse_program("bachelor(X) :- man(X), not married_status(X). married_status(X) :- married(X,Y,T)."))
    (r,) = [r for r in dp.dual_rules if r.head.predicate == "not_married_status_1"]
    (g,) = r.body
    assert isinstance(g, Forall) and g.var.name == "Y"
    assert isinstance(g.body, Forall) and g.body.var.name == "T"


def test_no_rules_gives_dual_fact():
    dp = dualize(parse_program("p :- q(X)."))
    (r,) = dp.aux_index[dp.dual_of[(False, "q", 1)]]
    assert r.body == () and len(r.head.args) == 1


def test_head_canonicalization():
    dp = dualize(parse_program("p(a, X, X)."))
    text = [canon(r) for r in dp.dual_rules if r.head.predicate.startswith("not_p_1")]
    assert text == [
        "not_p_1(_G1,_G2,_G3) :- _G1 \\= a.",
        "not_p_1(_G1,_G2,_G3) :- _G1 = a, _G3 \\= _G2.",
    ]


@pytest.mark.parametrize("path,prog", list(corpus_programs()), ids=lambda x: getattr(x, "name", ""))
def test_one_combining_rule_and_one_family_per_rule(path, prog):
    dp = dualize(prog)
    for key, rules in dp.user_index.items():
        dk = dp.dual_of[key]
        combining = dp.aux_index[dk]
        assert len(combining) == 1
        assert len(combining[0].body) == len(rules)
        called = [g.literal.predicate for g in combining[0].body]
        assert len(set(called)) == len(rules)
        for name in called:
            # a fact's family has no clauses, but it is still declared internal
            assert (False, name, key[2]) in dp.aux_keys


@pytest.mark.parametrize("path,prog", list(corpus_programs()), ids=lambda x: getattr(x, "name", ""))
def test_every_predicate_has_a_dual(path, prog):
    dp = dualize(prog)
    keys = {lit.key for r in prog.rules for lit in _lits(r)} | {(False, "neg_" + n, a) for n, a in prog.abducibles}
    keys.discard((False, "true", 0))
    for k in keys:
        assert k in dp.dual_of, k


def _lits(r):
    if r.head is not None:
        yield r.head
    for g in r.body:
        if isinstance(g, (Pos, NafNot)):
            yield g.literal


# -- global constraints


def test_no_constraints_empty_nmr():
    dp = dualize(parse_program("p :- not q. q :- not p."))
    assert dp.nmr_goal == []


def test_constraint_gives_one_check():
    dp = dualize(parse_program(":- p. p :- not q. q :- not p."))
    assert len(dp.nmr_goal) == 1
    assert count_models(parse_program(":- p. p :- not q. q :- not p."), parse_query("true")) == 1


def test_constraint_check_quantifies_free_vars():
    dp = dualize(parse_program("false :- person(X), sit(X), stand(X)."))
    (g,) = dp.nmr_goal
    assert isinstance(g, Forall) and g.var.name == "X"


def test_odd_loop_becomes_check():
    dp = dualize(parse_program("p :- not p, q. q."))
    assert dp.constraint_origins == ["odd-loop"]
    assert count_models(parse_program("p :- not p, q. q."), parse_query("true")) == 0


def test_strong_negation_pair_becomes_check():
    dp = dualize(parse_program("p(a). -p(X) :- q(X). q(a)."))
    assert dp.constraint_origins == ["strong-negation"]


SWEDE = """
false :- swede(X), not hasking(X).
hasking(X) :- king(Y, X).
false :- swede(X), swede(Y), X ≠ Y, king(K1, X), king(K2, Y), K1 ≠ K2.
false :- king_of_sweden(K1), king_of_sweden(K2), K1 ≠ K2.
king(K,X) :- king_of_sweden(K), swede(X).
swede(a). swede(b). king_of_sweden(k).
"""


def test_swede_one_king():
    p = parse_program(SWEDE)
    assert count_models(p, parse_query("?- hasking(a).")) == 1
    assert len(stable_models(ground(p))) == 1


def test_swede_two_kings():
    p = parse_program(SWEDE + "king_of_sweden(k2).")
    assert count_models(p, parse_query("?- hasking(a).")) == 0
    assert stable_models(ground(p)) == []


# -- ground completeness of the duals


def _ground_programs():
    for path, prog in corpus_programs():
        try:
            gp = ground(prog)
            models = stable_models(gp)
        except (UngroundableError, TooLargeError):
            continue
        yield path, prog, gp, models


@pytest.mark.parametrize("path,prog,gp,models", list(_ground_programs()), ids=lambda x: getattr(x, "name", ""))
def test_not_g_succeeds_iff_some_model_lacks_g(path, prog, gp, models):
    dp = dualize(prog)
    for atom in gp.atoms:
        if atom.predicate.startswith("neg_"):
            continue
        got = count_models(dp, (NafNot(atom),)) > 0
        assert got == any(atom not in m for m in models), atom
