"""Per-derivation constraint store.

A store holds an idempotent substitution, Herbrand disequalities, and linear
relations over exact rationals. Stores are values: every operation returns a
new store (or ``None`` on failure) and never mutates its argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import NonlinearConstraintError
from .terms import (
    ARITH_FUNCTORS,
    EQ,
    GE,
    GT,
    LE,
    LT,
    NE,
    Compound,
    Num,
    Term,
    Var,
    term_vars,
)

# linear relation operators, always read as ``expr OP 0``
L_EQ, L_LE, L_LT, L_NE = "=", "=<", "<", "\\="

LinExpr = Dict[Var, Fraction]


class NotNumeric(Exception):
    """An arithmetic expression mentions a non-numeric term."""


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: Tuple[Tuple[Var, Fraction], ...]
    const: Fraction
    op: str

    @classmethod
    def make(cls, coeffs: LinExpr, const: Fraction, op: str) -> "LinearConstraint":
        items = tuple(sorted(((v, c) for v, c in coeffs.items() if c), key=lambda vc: vc[0].id))
        return cls(items, Fraction(const), op)

    @property
    def vars(self) -> Tuple[Var, ...]:
        return tuple(v for v, _ in self.coeffs)

    def holds_constant(self) -> bool:
        return _check_constant(self.const, self.op)


def _check_constant(c: Fraction, op: str) -> bool:
    if op == L_EQ:
        return c == 0
    if op == L_LE:
        return c <= 0
    if op == L_LT:
        return c < 0
    return c != 0


@dataclass(frozen=True)
class ConstraintStore:
    subst: Dict[Var, Term] = field(default_factory=dict)
    diseqs: Tuple[Tuple[Term, Term], ...] = ()
    linear: Tuple[LinearConstraint, ...] = ()

    def walk(self, t: Term) -> Term:
        s = self.subst
        while isinstance(t, Var):
            nxt = s.get(t)
            if nxt is None:
                return t
            t = nxt
        return t

    def resolve(self, t: Term) -> Term:
        t = self.walk(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(self.resolve(a) for a in t.args))
        return t

    def linear_vars(self) -> set:
        return {v for c in self.linear for v in c.vars}

    def __bool__(self):
        return True


EMPTY = ConstraintStore()


# -- unification --------------------------------------------------------------


def _occurs(v: Var, t: Term, store: ConstraintStore) -> bool:
    t = store.walk(t)
    if isinstance(t, Var):
        return t == v
    if isinstance(t, Compound):
        return any(_occurs(v, a, store) for a in t.args)
    return False


def _bind_all(a: Term, b: Term, store: ConstraintStore) -> Optional[Tuple[ConstraintStore, List[Var]]]:
    """Plain Herbrand unification with occurs check; constraints are not consulted."""
    subst = None
    cur = store
    bound: List[Var] = []
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = cur.walk(x), cur.walk(y)
        if x is y or x == y:
            continue
        if isinstance(x, Var) or isinstance(y, Var):
            if isinstance(x, Var) and isinstance(y, Var):
                # keep the older variable as representative
                if x.id < y.id:
                    x, y = y, x
            elif not isinstance(x, Var):
                x, y = y, x
            if isinstance(y, Compound) and _occurs(x, y, cur):
                return None
            if subst is None:
                subst = dict(store.subst)
            subst[x] = y
            cur = ConstraintStore(subst, store.diseqs, store.linear)
            bound.append(x)
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return cur, bound


def unify(a: Term, b: Term, store: ConstraintStore = EMPTY) -> Optional[ConstraintStore]:
    """Least extension of ``store`` equating ``a`` and ``b``, or None on failure."""
    res = _bind_all(a, b, store)
    if res is None:
        return None
    new, bound = res
    if not bound:
        return new
    return _propagate(new, bound)


def unify_args(xs: Sequence[Term], ys: Sequence[Term], store: ConstraintStore) -> Optional[ConstraintStore]:
    if len(xs) != len(ys):
        return None
    if not xs:
        return store
    return unify(Compound("args", tuple(xs)), Compound("args", tuple(ys)), store)


def mgu(a: Term, b: Term) -> Optional[Dict[Var, Term]]:
    res = _bind_all(a, b, EMPTY)
    return None if res is None else res[0].subst


def _propagate(store: ConstraintStore, bound: Sequence[Var]) -> Optional[ConstraintStore]:
    if store.diseqs:
        store = _recheck_diseqs(store)
        if store is None:
            return None
    if store.linear:
        lv = store.linear_vars()
        if any(v in lv for v in bound):
            return _solve_linear(store)
    return store


# -- Herbrand disequality -----------------------------------------------------

_TRUE, _FALSE = "true", "false"


def _normalize_diseq(l: Term, r: Term, store: ConstraintStore):
    lr, rr = store.resolve(l), store.resolve(r)
    if lr == rr:
        return _FALSE
    m = mgu(lr, rr)
    if m is None:
        return _TRUE
    if len(m) == 1:
        ((v, t),) = m.items()
        return (v, t)
    return (lr, rr)


def _recheck_diseqs(store: ConstraintStore) -> Optional[ConstraintStore]:
    kept = []
    changed = False
    for l, r in store.diseqs:
        res = _normalize_diseq(l, r, store)
        if res is _FALSE:
            return None
        if res is _TRUE:
            changed = True
            continue
        if res != (l, r):
            changed = True
        kept.append(res)
    if not changed:
        return store
    return replace(store, diseqs=tuple(kept))


def add_diseq(a: Term, b: Term, store: ConstraintStore = EMPTY) -> Iterator[ConstraintStore]:
    """Post ``a \\= b``. Compound disequalities split into one alternative per argument."""
    lr, rr = store.resolve(a), store.resolve(b)
    if lr == rr:
        return
    if mgu(lr, rr) is None:
        yield store
        return
    if isinstance(lr, Compound) and isinstance(rr, Compound):
        for x, y in zip(lr.args, rr.args):
            yield from add_diseq(x, y, store)
        return
    if not isinstance(lr, Var):
        lr, rr = rr, lr
    new = replace(store, diseqs=store.diseqs + ((lr, rr),))
    if isinstance(rr, Num) and lr in store.linear_vars():
        new = _post_linear({lr: Fraction(1)}, -rr.value, L_NE, new)
        if new is None:
            return
    yield new


def diseqs_on(store: ConstraintStore, v: Var) -> List[Tuple[Term, Term]]:
    """Resolved disequalities that mention ``v``."""
    out = []
    for l, r in store.diseqs:
        lr, rr = store.resolve(l), store.resolve(r)
        if v in term_vars(lr) or v in term_vars(rr):
            out.append((lr, rr))
    return out


def drop_var_constraints(store: ConstraintStore, v: Var) -> ConstraintStore:
    """Forget every disequality that mentions ``v``."""
    kept = tuple(
        (l, r)
        for l, r in store.diseqs
        if v not in term_vars(store.resolve(l)) and v not in term_vars(store.resolve(r))
    )
    if len(kept) == len(store.diseqs):
        return store
    return replace(store, diseqs=kept)


# -- linear arithmetic --------------------------------------------------------


def is_arith(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor in ARITH_FUNCTORS and len(t.args) <= 2


def linearize(t: Term, store: ConstraintStore = EMPTY) -> Tuple[LinExpr, Fraction]:
    """Turn an arithmetic term into ``(coefficients, constant)``.

    Raises NotNumeric for non-numeric leaves and NonlinearConstraintError for
    products or quotients of two variable expressions.
    """
    t = store.walk(t)
    if isinstance(t, Var):
        return {t: Fraction(1)}, Fraction(0)
    if isinstance(t, Num):
        return {}, t.value
    if isinstance(t, Compound) and t.functor in ARITH_FUNCTORS:
        if len(t.args) == 1 and t.functor == "-":
            c, k = linearize(t.args[0], store)
            return {v: -x for v, x in c.items()}, -k
        if len(t.args) == 2:
            lc, lk = linearize(t.args[0], store)
            rc, rk = linearize(t.args[1], store)
            if t.functor in "+-":
                sign = 1 if t.functor == "+" else -1
                out = dict(lc)
                for v, x in rc.items():
                    out[v] = out.get(v, Fraction(0)) + sign * x
                return {v: x for v, x in out.items() if x}, lk + sign * rk
            if t.functor == "*":
                if lc and rc:
                    raise NonlinearConstraintError(f"nonlinear product {t!r}")
                if not lc:
                    return {v: lk * x for v, x in rc.items() if lk * x}, lk * rk
                return {v: rk * x for v, x in lc.items() if rk * x}, lk * rk
            if t.functor == "/":
                if rc:
                    raise NonlinearConstraintError(f"division by a variable expression {t!r}")
                if rk == 0:
                    raise NotNumeric("division by zero")
                return {v: x / rk for v, x in lc.items()}, lk / rk
    raise NotNumeric(repr(t))


def evaluate(t: Term, store: ConstraintStore = EMPTY) -> Optional[Fraction]:
    """Value of a ground arithmetic term, or None if it is not ground-numeric."""
    try:
        c, k = linearize(t, store)
    except NotNumeric:
        return None
    return None if c else k


def add_linear(op: str, lhs: Term, rhs: Term, store: ConstraintStore = EMPTY) -> Optional[ConstraintStore]:
    """Post ``lhs op rhs`` as a linear relation; None if unsatisfiable.

    Non-numeric operands make the relation false. Nonlinear relations raise
    NonlinearConstraintError.
    """
    try:
        lc, lk = linearize(lhs, store)
        rc, rk = linearize(rhs, store)
    except NotNumeric:
        return None
    coeffs = dict(lc)
    for v, x in rc.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - x
    const = lk - rk
    if op in (GT, GE):
        coeffs = {v: -x for v, x in coeffs.items()}
        const = -const
    lop = {EQ: L_EQ, NE: L_NE, LT: L_LT, LE: L_LE, GT: L_LT, GE: L_LE}[op]
    return _post_linear(coeffs, const, lop, store)


def _post_linear(coeffs: LinExpr, const: Fraction, op: str, store: ConstraintStore) -> Optional[ConstraintStore]:
    c = LinearConstraint.make(coeffs, const, op)
    if not c.coeffs:
        return store if c.holds_constant() else None
    return _solve_linear(replace(store, linear=store.linear + (c,)))


def _substitute(c: LinearConstraint, store: ConstraintStore) -> LinearConstraint:
    coeffs: LinExpr = {}
    const = c.const
    for v, x in c.coeffs:
        t = store.walk(v)
        if isinstance(t, Var):
            coeffs[t] = coeffs.get(t, Fraction(0)) + x
        else:
            sub_c, sub_k = linearize(t, store)
            for w, y in sub_c.items():
                coeffs[w] = coeffs.get(w, Fraction(0)) + x * y
            const += x * sub_k
    return LinearConstraint.make(coeffs, const, c.op)


def _expr_sub(expr: LinExpr, const: Fraction, v: Var, val: LinExpr, val_k: Fraction):
    """Replace ``v`` by ``val + val_k`` inside ``expr + const``."""
    x = expr.get(v)
    if not x:
        return expr, const
    out = {w: y for w, y in expr.items() if w != v}
    for w, y in val.items():
        out[w] = out.get(w, Fraction(0)) + x * y
    return {w: y for w, y in out.items() if y}, const + x * val_k


def gaussian(eqs: Sequence[Tuple[LinExpr, Fraction]], pick_pivot) -> Optional[List[Tuple[Var, LinExpr, Fraction]]]:
    """Solve equalities ``expr + const = 0`` into ``pivot = expr' + const'`` rows.

    Returns None when the system is inconsistent. Rows are fully reduced: no
    pivot occurs on any right-hand side.
    """
    solved: List[Tuple[Var, LinExpr, Fraction]] = []
    for expr, const in eqs:
        for pv, pe, pk in solved:
            expr, const = _expr_sub(expr, const, pv, pe, pk)
        if not expr:
            if const != 0:
                return None
            continue
        pivot = pick_pivot(expr)
        a = expr[pivot]
        val = {w: -y / a for w, y in expr.items() if w != pivot}
        val_k = -const / a
        solved = [(pv, *_expr_sub(pe, pk, pivot, val, val_k)) for pv, pe, pk in solved]
        solved.append((pivot, val, val_k))
    return solved


Row = Tuple[LinExpr, Fraction, bool]  # expr + const (< if strict else =<) 0


def _norm_row(expr: LinExpr, const: Fraction, strict: bool) -> Row:
    if expr:
        scale = max(abs(x) for x in expr.values())
        expr = {v: x / scale for v, x in expr.items()}
        const = const / scale
    return expr, const, strict


def _row_key(row: Row):
    expr, const, strict = row
    return (tuple(sorted(((v.id, x) for v, x in expr.items()))), const, strict)


def fourier_motzkin(rows: Sequence[Row], eliminate: Sequence[Var]) -> Optional[List[Row]]:
    """Eliminate ``eliminate`` from the inequality rows.

    Returns the projected rows, or None if a contradiction (constant row that
    fails) is discovered along the way.
    """
    current: Dict[tuple, Row] = {}
    for r in rows:
        r = _norm_row(*r)
        if not r[0]:
            if not _row_holds(r):
                return None
            continue
        current.setdefault(_row_key(r), r)
    for v in eliminate:
        pos, neg, rest = [], [], []
        for r in current.values():
            x = r[0].get(v)
            if not x:
                rest.append(r)
            elif x > 0:
                pos.append(r)
            else:
                neg.append(r)
        nxt: Dict[tuple, Row] = {}
        for r in rest:
            nxt.setdefault(_row_key(r), r)
        for pe, pk, ps in pos:
            a = pe[v]
            for ne, nk, ns in neg:
                b = -ne[v]
                expr: LinExpr = {}
                for w, y in pe.items():
                    if w != v:
                        expr[w] = expr.get(w, Fraction(0)) + b * y
                for w, y in ne.items():
                    if w != v:
                        expr[w] = expr.get(w, Fraction(0)) + a * y
                expr = {w: y for w, y in expr.items() if y}
                row = _norm_row(expr, b * pk + a * nk, ps or ns)
                if not row[0]:
                    if not _row_holds(row):
                        return None
                    continue
                nxt.setdefault(_row_key(row), row)
        current = nxt
    return list(current.values())


def _row_holds(row: Row) -> bool:
    _, const, strict = row
    return const < 0 if strict else const <= 0


def feasible(rows: Sequence[Row]) -> bool:
    vs: List[Var] = []
    for expr, _, _ in rows:
        for v in expr:
            if v not in vs:
                vs.append(v)
    vs.sort(key=lambda v: v.id)
    res = fourier_motzkin(rows, vs)
    return res is not None and all(_row_holds(r) for r in res)


def _newest(expr: LinExpr) -> Var:
    return max(expr, key=lambda v: v.id)


def _solve_linear(store: ConstraintStore) -> Optional[ConstraintStore]:
    """Re-derive linear consistency; bind variables the equalities fix to a value."""
    while True:
        cons: List[LinearConstraint] = []
        for c in store.linear:
            try:
                sc = _substitute(c, store)
            except NotNumeric:
                return None
            if not sc.coeffs:
                if not sc.holds_constant():
                    return None
                continue
            cons.append(sc)
        eqs = [(dict(c.coeffs), c.const) for c in cons if c.op == L_EQ]
        solved = gaussian(eqs, _newest)
        if solved is None:
            return None
        fixed = [(v, k) for v, e, k in solved if not e]
        if fixed:
            subst = dict(store.subst)
            for v, k in fixed:
                subst[v] = Num(k)
            store = ConstraintStore(subst, store.diseqs, tuple(cons))
            if store.diseqs:
                store = _recheck_diseqs(store)
                if store is None:
                    return None
            continue
        rows: List[Row] = []
        nes: List[Tuple[LinExpr, Fraction]] = []
        for c in cons:
            if c.op == L_EQ:
                continue
            expr, const = dict(c.coeffs), c.const
            for pv, pe, pk in solved:
                expr, const = _expr_sub(expr, const, pv, pe, pk)
            if c.op == L_NE:
                nes.append((expr, const))
            else:
                rows.append((expr, const, c.op == L_LT))
        if not feasible(rows):
            return None
        for expr, const in nes:
            if not expr:
                if const == 0:
                    return None
                continue
            below = rows + [(expr, const, True)]
            above = rows + [({v: -x for v, x in expr.items()}, -const, True)]
            if not feasible(below) and not feasible(above):
                return None
        return replace(store, linear=tuple(cons))


# -- projection ---------------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    """A printable answer constraint ``lhs op rhs``."""

    kind: str  # binding | equation | inequality | disequality
    lhs: Term
    op: str
    rhs: Term


def lin_to_term(expr: LinExpr, const: Fraction, order=None) -> Term:
    items = sorted(expr.items(), key=order or (lambda vx: (vx[0].name, vx[0].id)))
    term: Optional[Term] = None
    for v, x in items:
        mag = abs(x)
        piece: Term = v if mag == 1 else Compound("*", (Num(mag), v))
        if term is None:
            if x > 0:
                term = piece
            else:
                term = Compound("-", (v,)) if mag == 1 else Compound("*", (Num(x), v))
        else:
            term = Compound("+" if x > 0 else "-", (term, piece))
    if term is None:
        return Num(const)
    if const > 0:
        term = Compound("+", (term, Num(const)))
    elif const < 0:
        term = Compound("-", (term, Num(-const)))
    return term


def project(store: ConstraintStore, keep: Sequence[Var]) -> List[Relation]:
    """Residual constraints over ``keep``: bindings, linear equations,
    inequalities, then disequalities, each group sorted by variable name."""
    bindings: List[Relation] = []
    visible: List[Var] = []
    for v in keep:
        t = store.resolve(v)
        if t != v:
            bindings.append(Relation("binding", v, EQ, t))
        for w in term_vars(t):
            if w not in visible:
                visible.append(w)
    rank = {v: i for i, v in enumerate(visible)}

    cons = []
    for c in store.linear:
        try:
            sc = _substitute(c, store)
        except NotNumeric:
            continue
        if sc.coeffs:
            cons.append(sc)

    def pivot_pref(expr: LinExpr) -> Var:
        hidden = [v for v in expr if v not in rank]
        if hidden:
            return min(hidden, key=lambda v: v.id)
        return min(expr, key=lambda v: rank[v])

    eqs = [(dict(c.coeffs), c.const) for c in cons if c.op == L_EQ]
    solved = gaussian(eqs, pivot_pref) or []
    equations: List[Relation] = []
    for pv, pe, pk in solved:
        if pv in rank and all(w in rank for w in pe):
            equations.append(Relation("equation", pv, EQ, lin_to_term(pe, pk)))

    rows: List[Row] = []
    nes: List[Tuple[LinExpr, Fraction]] = []
    for c in cons:
        if c.op == L_EQ:
            continue
        expr, const = dict(c.coeffs), c.const
        for pv, pe, pk in solved:
            expr, const = _expr_sub(expr, const, pv, pe, pk)
        if c.op == L_NE:
            if expr and all(w in rank for w in expr):
                nes.append((expr, const))
        else:
            rows.append((expr, const, c.op == L_LT))
    hidden = sorted({v for e, _, _ in rows for v in e if v not in rank}, key=lambda v: v.id)
    projected = fourier_motzkin(rows, hidden) or []
    inequalities = [_row_relation(e, k, s) for e, k, s in projected if e]
    for expr, const in nes:
        lead = min(expr, key=lambda v: (v.name, v.id))
        scale = expr[lead]
        inequalities_ne = Relation(
            "disequality",
            lin_to_term({v: x / scale for v, x in expr.items()}, Fraction(0)),
            NE,
            Num(-const / scale),
        )
        inequalities.append(inequalities_ne)

    diseqs: List[Relation] = []
    for l, r in store.diseqs:
        lr, rr = store.resolve(l), store.resolve(r)
        vs = term_vars(lr) + term_vars(rr)
        if vs and all(v in rank for v in vs):
            if not isinstance(lr, Var) and isinstance(rr, Var):
                lr, rr = rr, lr
            diseqs.append(Relation("disequality", lr, NE, rr))

    def by_name(rel: Relation):
        vs = term_vars(rel.lhs) + term_vars(rel.rhs)
        return tuple((v.name, v.id) for v in vs)

    equations.sort(key=by_name)
    inequalities.sort(key=by_name)
    diseqs.sort(key=by_name)
    return bindings + equations + inequalities + diseqs


def _row_relation(expr: LinExpr, const: Fraction, strict: bool) -> Relation:
    lead = min(expr, key=lambda v: (v.name, v.id))
    scale = expr[lead]
    mag = abs(scale)
    expr = {v: x / mag for v, x in expr.items()}
    rhs = -const / mag
    if scale > 0:
        op = LT if strict else LE
    else:
        expr = {v: -x for v, x in expr.items()}
        rhs = -rhs
        op = GT if strict else GE
    return Relation("inequality", lin_to_term(expr, Fraction(0)), op, Num(rhs))
