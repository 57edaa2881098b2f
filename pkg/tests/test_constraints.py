import itertools
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gdasp import (
    Compound,
    Const,
    NonlinearConstraintError,
    Num,
    Var,
    add_diseq,
    add_linear,
    apply_substitution,
    parse_program,
    parse_query,
    project,
    solve,
    unify,
)
from gdasp.constraints import EMPTY, evaluate, feasible, fourier_motzkin, mgu
from gdasp.printer import Printer, VarNamer
from gdasp.terms import term_vars

X, Y, Z = Var("X"), Var("Y"), Var("Z")
a, b = Const("a"), Const("b")


def f(*args):
    return Compound("f", args)


def show(rel, keep):
    p = Printer(VarNamer(keep=keep))
    return f"{p.term(rel.lhs)} {rel.op} {p.term(rel.rhs)}"


# -- unification


def test_occurs_check():
    assert unify(X, f(X)) is None
    assert unify(f(X, Y), f(Y, f(X))) is None


def test_unify_binds_through_store():
    s = unify(f(X, b), f(a, Y))
    assert s.resolve(X) == a and s.resolve(Y) == b


def _robinson(s, t):
    # textbook unifier, written independently of the library
    sub = {}

    def walk(x):
        while isinstance(x, Var) and x in sub:
            x = sub[x]
        return x

    def occ(v, x):
        x = walk(x)
        if x == v:
            return True
        return isinstance(x, Compound) and any(occ(v, y) for y in x.args)

    stack = [(s, t)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x), walk(y)
        if x == y:
            continue
        if isinstance(x, Var):
            if occ(x, y):
                return None
            sub[x] = y
        elif isinstance(y, Var):
            stack.append((y, x))
        elif isinstance(x, Compound) and isinstance(y, Compound) and x.functor == y.functor and len(x.args) == len(y.args):
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return sub


VARS = [Var(n) for n in "ABCD"]
CONSTS = [a, b]


def terms(depth=3):
    base = st.one_of(st.sampled_from(VARS), st.sampled_from(CONSTS))
    if depth == 0:
        return base
    sub = terms(depth - 1)
    return st.one_of(
        base,
        st.builds(lambda x, y: Compound("f", (x, y)), sub, sub),
        st.builds(lambda x: Compound("g", (x,)), sub),
    )


def _more_general(s, t, vs):
    """``s`` is at least as general as ``t``: t = s;t on every variable."""
    return all(apply_substitution(apply_substitution(v, s), t) == apply_substitution(v, t) for v in vs)


@settings(max_examples=300, deadline=None)
@given(terms(), terms())
def test_mgu_is_most_general(s, t):
    mine, ref = mgu(s, t), _robinson(s, t)
    assert (mine is None) == (ref is None)
    if mine is None:
        return
    vs = list(dict.fromkeys(term_vars(s) + term_vars(t)))
    assert apply_substitution(s, mine) == apply_substitution(t, mine)
    # equally general as the reference, so every unifier factors through it
    assert _more_general(mine, ref, vs) and _more_general(ref, mine, vs)


@settings(max_examples=150, deadline=None)
@given(terms(2), terms(2))
def test_ground_unifiers_factor_through_mgu(s, t):
    sigma = mgu(s, t)
    for values in itertools.product(CONSTS + [f(a, b)], repeat=len(VARS)):
        theta = dict(zip(VARS, values))
        if apply_substitution(s, theta) == apply_substitution(t, theta):
            assert sigma is not None
            assert _more_general(sigma, theta, VARS)


# -- disequality


def test_compound_diseq_splits_per_argument():
    alts = list(add_diseq(f(a, b), f(X, Y)))
    assert len(alts) == 2
    assert [st_.diseqs for st_ in alts] == [((X, a),), ((Y, b),)]


def test_diseq_trivial_cases():
    assert list(add_diseq(a, b)) == [EMPTY]
    assert list(add_diseq(a, a)) == []


def test_diseq_rechecked_on_binding():
    (s,) = add_diseq(X, a)
    assert unify(X, a, s) is None
    assert unify(X, b, s).diseqs == ()


# -- linear arithmetic


def lin(text):
    """Parse a relation and post it to the store."""
    (g,) = parse_query(text)
    return g


def post(store, *goals):
    for g in goals:
        store = add_linear(g.op, g.lhs, g.rhs, store)
        if store is None:
            return None
    return store


def test_equation_fixes_values():
    g1 = lin("X + Y = 3")
    g2 = lin("X - Y = 1")
    x, y = g1.lhs.args
    s = post(EMPTY, g1, lin_with(g2, {"X": x, "Y": y}))
    assert s.resolve(x) == Num(2) and s.resolve(y) == Num(1)


def lin_with(g, names):
    # rebuild a parsed relation over the given variables
    def sub(t):
        if isinstance(t, Var):
            return names[t.name]
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(sub(x) for x in t.args))
        return t

    return type(g)(g.op, sub(g.lhs), sub(g.rhs))


def rel(text, vs):
    return lin_with(lin(text), vs)


def test_inequalities_infeasible():
    vs = {"X": X, "Y": Y}
    assert post(EMPTY, rel("X < Y", vs), rel("Y < X", vs)) is None
    assert post(EMPTY, rel("X =< Y", vs), rel("Y =< X", vs)) is not None


def test_numeric_diseq_against_pinned_interval():
    vs = {"X": X}
    s = post(EMPTY, rel("X >= 3", vs), rel("X =< 3", vs))
    # X is forced to 3 only through inequalities; X \= 3 must still be rejected
    assert list(add_diseq(X, Num(3), s)) == []
    s2 = post(EMPTY, rel("X >= 3", vs), rel("X =< 4", vs))
    assert len(list(add_diseq(X, Num(3), s2))) == 1


def test_nonlinear_is_an_error():
    with pytest.raises(NonlinearConstraintError):
        add_linear("=", Compound("*", (X, Y)), Num(3), EMPTY)


def test_exact_arithmetic():
    assert evaluate(Compound("+", (Num(Fraction(1, 10)), Num(Fraction(2, 10))))) == Fraction(3, 10)


# -- projection examples


def test_project_binding():
    s = unify(X, f(Y))
    assert [show(r, [X, Y]) for r in project(s, [X, Y])] == ["X = f(Y)"]


def test_project_diseq():
    (s,) = add_diseq(X, a)
    assert [show(r, [X]) for r in project(s, [X])] == ["X \\= a"]


def test_project_drops_hidden_vars():
    vs = {"X": X, "Y": Y, "Z": Z}
    s = post(EMPTY, rel("Z = X + 1", vs), rel("Z < Y", vs))
    assert [show(r, [X, Y]) for r in project(s, [X, Y])] == ["X - Y < -1"]


MORTGAGE = """
mortgage(P, T, I, B, MP) :- T = 1, B = P + P*I - MP.
mortgage(P, T, I, B, MP) :- T > 1, P1 = P + P*I - MP, T1 = T - 1, mortgage(P1, T1, I, B, MP).
"""


def annuity(t, i):
    # closed form: P = B/(1+I)^T + MP*(1-(1+I)^-T)/I
    v = 1 / (1 + i)
    return v**t, (1 - v**t) / i


def test_mortgage_projection_matches_closed_form():
    prog = parse_program(MORTGAGE)
    q = parse_query("?- mortgage(P, 12, 1/100, B, Mp).")
    (ans,) = list(solve(prog, q))
    (r,) = ans.residue
    kb, km = annuity(12, Fraction(1, 100))
    assert kb == Fraction(100, 101) ** 12
    assert km == 100 * (1 - Fraction(100, 101) ** 12)
    p, bvar, mp = (q[0].literal.args[i] for i in (0, 3, 4))
    assert r.lhs == p
    assert r.rhs == Compound("+", (Compound("*", (Num(kb), bvar)), Compound("*", (Num(km), mp))))


def test_mortgage_ground_query():
    prog = parse_program(MORTGAGE)
    (ans,) = list(solve(prog, parse_query("?- mortgage(P, 3, 1/10, 0, 100).")))
    kb, km = annuity(3, Fraction(1, 10))
    assert ans.bindings[0][1] == Num(km * 100)


# -- Fourier-Motzkin against vertex enumeration


def _solve_square(rows, rhs):
    n = len(rows)
    m = [list(r) + [c] for r, c in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for i in range(n):
            if i != col and m[i][col] != 0:
                k = m[i][col] / m[col][col]
                m[i] = [x - k * y for x, y in zip(m[i], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def _vertex_feasible(nvars, rows, bound=Fraction(10**4)):
    """Feasibility of ``sum a_i x_i + c (<|=<) 0`` by enumerating vertices.

    A slack t is added to strict rows (a.x + c + t =< 0) and maximized over
    the vertices of the boxed polytope; the system is feasible iff some
    vertex has t > 0 (or t >= 0 when nothing is strict).
    """
    dim = nvars + 1
    cons = []  # (coeffs, rhs) meaning coeffs . (x, t) =< rhs
    for expr, const, strict in rows:
        cons.append(([expr.get(i, 0) for i in range(nvars)] + [1 if strict else 0], -const))
    for i in range(nvars):
        e = [0] * dim
        e[i] = 1
        cons.append((e, bound))
        cons.append(([-x for x in e], bound))
    top = [0] * nvars + [1]
    cons.append((top, Fraction(1)))
    cons.append(([-x for x in top], bound * 100))
    best = None
    for subset in itertools.combinations(cons, dim):
        pt = _solve_square([c for c, _ in subset], [r for _, r in subset])
        if pt is None:
            continue
        if all(sum(x * y for x, y in zip(c, pt)) <= r for c, r in cons):
            best = pt[-1] if best is None else max(best, pt[-1])
    if best is None:
        return False
    strict = any(s for _, _, s in rows)
    return best > 0 if strict else best >= 0


coef = st.integers(-3, 3).map(Fraction)


@st.composite
def systems(draw):
    n = draw(st.integers(1, 3))
    rows = []
    for _ in range(draw(st.integers(1, 5))):
        expr = {i: draw(coef) for i in range(n)}
        expr = {i: x for i, x in expr.items() if x}
        rows.append((expr, Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 2))), draw(st.booleans())))
    return n, rows


@settings(max_examples=60, deadline=None)
@given(systems())
def test_fourier_motzkin_matches_vertex_enumeration(system):
    n, rows = system
    vs = [Var(f"V{i}") for i in range(n)]
    fm_rows = [({vs[i]: x for i, x in e.items()}, c, s) for e, c, s in rows]
    assert feasible(fm_rows) == _vertex_feasible(n, rows)


@settings(max_examples=60, deadline=None)
@given(systems(), st.integers(0, 2))
def test_projection_is_sound(system, keep_n):
    # every point allowed by the projection extends to the full system
    n, rows = system
    keep_n = min(keep_n, n - 1)
    vs = [Var(f"V{i}") for i in range(n)]
    fm_rows = [({vs[i]: x for i, x in e.items()}, c, s) for e, c, s in rows]
    assume(feasible(fm_rows))
    projected = fourier_motzkin(fm_rows, vs[keep_n:])
    assert projected is not None
    grid = [Fraction(k, 2) for k in range(-6, 7)]
    for point in itertools.product(grid, repeat=keep_n):
        val = dict(zip(vs[:keep_n], point))
        ok = all(
            (sum(x * val[v] for v, x in e.items()) + c < 0) if s else (sum(x * val[v] for v, x in e.items()) + c <= 0)
            for e, c, s in projected
        )
        if not ok:
            continue
        # substitute the kept values and check the rest with the independent oracle
        rest = []
        for e, c, s in rows:
            c2 = c + sum(x * point[i] for i, x in e.items() if i < keep_n)
            rest.append(({i - keep_n: x for i, x in e.items() if i >= keep_n}, c2, s))
        assert _vertex_feasible(n - keep_n, rest), (point, rows)


@settings(max_examples=40, deadline=None)
@given(systems())
def test_store_projection_is_sound(system):
    # the same property through the public store API, including equations
    n, rows = system
    vs = [Var(f"V{i}") for i in range(n)]
    store = EMPTY
    for k, (e, c, s) in enumerate(rows):
        op = "=" if k == 0 and len(rows) > 1 else ("<" if s else "=<")
        lhs = Num(c)
        for i, x in e.items():
            lhs = Compound("+", (lhs, Compound("*", (Num(x), vs[i]))))
        store = add_linear(op, lhs, Num(0), store)
        if store is None:
            return
    keep = vs[:1]
    rels = project(store, keep)
    grid = [Fraction(k, 2) for k in range(-6, 7)]
    for x0 in grid:
        s1 = unify(vs[0], Num(x0), store)
        holds = all(_rel_holds(r, {vs[0]: Num(x0)}) for r in rels)
        if holds:
            assert s1 is not None, (x0, rows, rels)


def _rel_holds(r, val):
    lhs = evaluate(apply_substitution(r.lhs, val))
    rhs = evaluate(apply_substitution(r.rhs, val))
    if lhs is None or rhs is None:
        return apply_substitution(r.lhs, val) == apply_substitution(r.rhs, val)
    return {"=": lhs == rhs, "\\=": lhs != rhs, "<": lhs < rhs, "=<": lhs <= rhs, ">": lhs > rhs, ">=": lhs >= rhs}[r.op]
