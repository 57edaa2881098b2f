"""Brute-force ground truth for the function-free fragment.

Programs are grounded over the constants they mention, and stable models are
found by guessing the truth of every atom that occurs under default negation,
then comparing the guess with the least model of the reduct.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .constraints import EMPTY, unify
from .dual import desugar_abducibles
from .errors import TooLargeError, UngroundableError
from .terms import (
    EQ,
    GE,
    GT,
    LE,
    LT,
    NE,
    TRUE_KEY,
    Compound,
    Goal,
    Literal,
    NafNot,
    Num,
    Pos,
    Program,
    Rel,
    Rule,
    Term,
    Var,
    apply_substitution,
    literal_is_ground,
    literal_vars,
    rule_vars,
    subst_literal,
)

MAX_ATOMS = 24

GroundRule = Tuple[Optional[int], FrozenSet[int], FrozenSet[int]]


@dataclass
class GroundProgram:
    atoms: List[Literal] = field(default_factory=list)
    rules: List[GroundRule] = field(default_factory=list)
    constraints: List[GroundRule] = field(default_factory=list)
    universe: List[Term] = field(default_factory=list)
    complements: List[Tuple[int, int]] = field(default_factory=list)

    def index(self) -> Dict[Literal, int]:
        return {a: i for i, a in enumerate(self.atoms)}


def _check_term(t: Term, where: str):
    if isinstance(t, Compound):
        raise UngroundableError(f"function symbol {t.functor}/{len(t.args)} in {where}")


def _universe(rules: Sequence[Rule], extra: Iterable[Goal]) -> List[Term]:
    out: List[Term] = []

    def add_lit(lit: Literal):
        for a in lit.args:
            _check_term(a, lit.predicate)
            if not isinstance(a, Var) and a not in out:
                out.append(a)

    for r in rules:
        if r.head is not None:
            add_lit(r.head)
        for g in r.body:
            if isinstance(g, (Pos, NafNot)):
                add_lit(g.literal)
            elif isinstance(g, Rel):
                for side in (g.lhs, g.rhs):
                    if isinstance(side, Compound):
                        raise UngroundableError("arithmetic expression in a relation")
                    if not isinstance(side, Var) and side not in out:
                        out.append(side)
    for g in extra:
        if isinstance(g, (Pos, NafNot)):
            add_lit(g.literal)
    return out


def _rel_holds(g: Rel) -> bool:
    a, b = g.lhs, g.rhs
    if g.op == EQ:
        return a == b
    if g.op == NE:
        return a != b
    if not (isinstance(a, Num) and isinstance(b, Num)):
        return False
    x, y = a.value, b.value
    return {LT: x < y, LE: x <= y, GT: x > y, GE: x >= y}[g.op]


def _match(pattern: Literal, atom: Literal, s: Dict[Var, Term]) -> Optional[Dict[Var, Term]]:
    if pattern.key != atom.key:
        return None
    out = dict(s)
    for p, a in zip(pattern.args, atom.args):
        if isinstance(p, Var):
            bound = out.get(p)
            if bound is None:
                out[p] = a
            elif bound != a:
                return None
        elif p != a:
            return None
    return out


def _instances(rule: Rule, possible: Dict[tuple, List[Literal]], universe: Sequence[Term]):
    """Substitutions making every positive body atom possible."""
    pos = [g.literal for g in rule.body if isinstance(g, Pos) and g.literal.key != TRUE_KEY]
    for g in rule.body:
        if isinstance(g, Rel) and g.op in (LT, LE, GT, GE):
            if any(isinstance(x, Var) for x in (g.lhs, g.rhs)):
                raise UngroundableError("numeric constraint over variables")

    def join(i: int, s: Dict[Var, Term]):
        if i == len(pos):
            yield s
            return
        for atom in possible.get(pos[i].key, ()):
            s2 = _match(pos[i], atom, s)
            if s2 is not None:
                yield from join(i + 1, s2)

    all_vars = rule_vars(rule)
    for s in join(0, {}):
        free = [v for v in all_vars if v not in s]
        for combo in itertools.product(universe, repeat=len(free)):
            full = dict(s)
            full.update(zip(free, combo))
            yield full


def ground(p: Program, query: Sequence[Goal] = ()) -> GroundProgram:
    rules = [r for r in p.rules] + desugar_abducibles(p)
    universe = _universe(rules, query)
    possible: Dict[tuple, List[Literal]] = {}
    possible_set: Set[Literal] = set()

    def add(atom: Literal) -> bool:
        if atom in possible_set:
            return False
        possible_set.add(atom)
        possible.setdefault(atom.key, []).append(atom)
        return True

    heads = [r for r in rules if r.head is not None]
    changed = True
    while changed:
        changed = False
        for r in heads:
            for s in _instances(r, possible, universe):
                if not all(_rel_holds(_ground_rel(g, s)) for g in r.body if isinstance(g, Rel)):
                    continue
                if add(subst_literal(r.head, s)):
                    changed = True
                    if len(possible_set) > MAX_ATOMS:
                        raise TooLargeError(f"more than {MAX_ATOMS} ground atoms")

    gp = GroundProgram(universe=list(universe))
    idx: Dict[Literal, int] = {}

    def atom_id(a: Literal) -> int:
        if a not in idx:
            idx[a] = len(gp.atoms)
            gp.atoms.append(a)
        return idx[a]

    for a in sorted(possible_set, key=_atom_order):
        atom_id(a)
    seen_rules = set()
    for r in rules:
        for s in _instances(r, possible, universe):
            posl, negl, ok = [], [], True
            for g in r.body:
                if isinstance(g, Rel):
                    if not _rel_holds(_ground_rel(g, s)):
                        ok = False
                        break
                    continue
                lit = subst_literal(g.literal, s)
                if lit.key == TRUE_KEY:
                    if isinstance(g, NafNot):
                        ok = False
                        break
                    continue
                if isinstance(g, Pos):
                    posl.append(idx[lit])
                elif lit in possible_set:
                    negl.append(idx[lit])
            if not ok:
                continue
            head = None if r.head is None else idx[subst_literal(r.head, s)]
            gr = (head, frozenset(posl), frozenset(negl))
            if gr in seen_rules:
                continue
            seen_rules.add(gr)
            (gp.constraints if head is None else gp.rules).append(gr)
    for a, i in idx.items():
        if a.strong_neg and a.complement() in idx:
            gp.complements.append((idx[a.complement()], i))
    return gp


def _ground_rel(g: Rel, s) -> Rel:
    return Rel(g.op, apply_substitution(g.lhs, s), apply_substitution(g.rhs, s))


def _atom_order(a: Literal):
    return (a.predicate, a.strong_neg, len(a.args), tuple(repr(x) for x in a.args))


def least_model(rules: Iterable[Tuple[int, FrozenSet[int]]]) -> Set[int]:
    rules = list(rules)
    m: Set[int] = set()
    changed = True
    while changed:
        changed = False
        for h, pos in rules:
            if h not in m and pos <= m:
                m.add(h)
                changed = True
    return m


def stable_models(g: GroundProgram) -> List[FrozenSet[Literal]]:
    """All stable models, as sets of ground literals, in a fixed order."""
    if len(g.atoms) > MAX_ATOMS:
        raise TooLargeError(f"more than {MAX_ATOMS} ground atoms")
    negated = sorted({a for _, _, neg in g.rules + g.constraints for a in neg})
    out: List[FrozenSet[Literal]] = []
    for mask in range(1 << len(negated)):
        guess = {a for k, a in enumerate(negated) if mask >> k & 1}
        reduct = [(h, pos) for h, pos, neg in g.rules if not (neg & guess)]
        m = least_model(reduct)
        if {a for a in negated if a in m} != guess:
            continue
        if any(pos <= m and not (neg & m) for _, pos, neg in g.constraints):
            continue
        if any(a in m and b in m for a, b in g.complements):
            continue
        out.append(frozenset(g.atoms[i] for i in sorted(m)))
    return out


def models_of(p: Program, query: Sequence[Goal] = ()) -> List[FrozenSet[Literal]]:
    return stable_models(ground(p, query))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: Optional[FrozenSet[Literal]] = None

    def __bool__(self):
        return self.ok


def _instantiations(lit: Literal, store, universe: Sequence[Term]):
    vs = literal_vars(lit)
    for combo in itertools.product(universe, repeat=len(vs)):
        s = store
        for v, c in zip(vs, combo):
            s = unify(v, c, s)
            if s is None:
                break
        if s is not None:
            yield subst_literal(lit, dict(zip(vs, combo)))


def check_answer(answer, models: Sequence[FrozenSet[Literal]], universe: Sequence[Term] = ()) -> Verdict:
    """PASS iff one stable model contains every positive model literal and none of the negated ones.

    Literals with free variables are read through the answer's constraint store:
    a positive one needs some admissible instance in the model, a negated one
    needs all admissible instances absent.
    """
    store = getattr(answer, "store", EMPTY)
    entries = list(answer.model)
    for m in models:
        ok = True
        for g in entries:
            lit = g.literal
            if literal_is_ground(lit):
                inside = lit in m
                if inside != isinstance(g, Pos):
                    ok = False
                    break
                continue
            insts = list(_instantiations(lit, store, universe))
            if isinstance(g, Pos):
                if not any(i in m for i in insts):
                    ok = False
                    break
            elif any(i in m for i in insts):
                ok = False
                break
        if ok:
            return Verdict(True, m)
    return Verdict(False)


def holds_somewhere(models: Sequence[FrozenSet[Literal]], g: Goal) -> bool:
    """Whether a ground literal goal is true in at least one model."""
    if isinstance(g, Pos):
        return any(g.literal in m for m in models)
    return any(g.literal not in m for m in models)
