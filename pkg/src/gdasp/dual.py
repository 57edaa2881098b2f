"""Dual rules for constructive negation, abducible desugaring, and the NMR check.

Every user predicate ``p/n`` gets a combining dual ``not_p/n`` whose success
means ``not p(...)`` holds. Per-rule duals ``not_p_i`` negate one body goal at a
time, and body-only variables are universally quantified with ``forall``.
Global constraints become ``chk_i`` checks that are appended to every query.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ProgramError
from .terms import (
    ABDUCIBLE,
    COMPLEMENT_OP,
    DUAL,
    EQ,
    NMR,
    TRUE_KEY,
    Forall,
    Goal,
    Literal,
    NafNot,
    Pos,
    PredKey,
    Program,
    Rel,
    Rule,
    Var,
    goal_vars,
    iter_rule_literals,
)


def negate_builtin(g: Rel) -> Rel:
    return Rel(COMPLEMENT_OP[g.op], g.lhs, g.rhs)


def negate(g: Goal) -> Goal:
    if isinstance(g, Pos):
        return NafNot(g.literal)
    if isinstance(g, NafNot):
        return Pos(g.literal)
    if isinstance(g, Rel):
        return negate_builtin(g)
    raise TypeError(f"cannot negate {g!r}")


def pred_name(key: PredKey) -> str:
    # plain identifier, so generated rules print without quotes
    strong, name, _ = key
    return ("minus_" + name) if strong else name


class _Names:
    """Allocates internal predicate names that cannot collide with user names."""

    def __init__(self, taken: Iterable[str]):
        self.taken: Set[str] = set(taken)
        self.internal: Set[str] = set()

    def fresh(self, base: str, internal: bool = True) -> str:
        name = base
        while name in self.taken:
            name += "_"
        self.taken.add(name)
        if internal:
            self.internal.add(name)
        return name


def _user_names(p: Program) -> Set[str]:
    names = set()
    for lit in iter_rule_literals(p.rules):
        names.add(lit.predicate)
    for q in p.queries:
        for g in q:
            for lit in _goal_literals(g):
                names.add(lit.predicate)
    for name, _ in p.abducibles:
        names.add(name)
    return names


def _goal_literals(g: Goal):
    if isinstance(g, (Pos, NafNot)):
        yield g.literal
    elif isinstance(g, Forall):
        yield from _goal_literals(g.body)


def desugar_abducibles(p: Program, names: Optional[_Names] = None) -> List[Rule]:
    """Even-loop encoding ``a :- not neg_a.  neg_a :- not a.`` per abducible."""
    names = names or _Names(_user_names(p))
    heads = {(r.head.predicate, r.head.arity) for r in p.rules if r.head is not None and not r.head.strong_neg}
    next_id = max((r.id for r in p.rules), default=0)
    out: List[Rule] = []
    for name, arity in p.abducibles:
        if (name, arity) in heads:
            span = next(
                (r.span for r in p.rules if r.head is not None and (r.head.predicate, r.head.arity) == (name, arity)),
                None,
            )
            raise ProgramError(f"abducible {name}/{arity} must not be defined by rules", span)
        vs = tuple(Var(f"V{i + 1}") for i in range(arity))
        neg = names.fresh(f"neg_{name}", internal=False)
        a, na = Literal(name, vs), Literal(neg, vs)
        next_id += 1
        out.append(Rule(a, (NafNot(na),), next_id, ABDUCIBLE))
        next_id += 1
        out.append(Rule(na, (NafNot(a),), next_id, ABDUCIBLE))
    return out


@dataclass
class DualProgram:
    user_rules: List[Rule]
    dual_rules: List[Rule]
    nmr_goal: List[Goal]
    abducible_rules: List[Rule]
    nmr_rules: List[Rule] = field(default_factory=list)
    program: Optional[Program] = None
    # user key -> head key of its combining dual
    dual_of: Dict[PredKey, PredKey] = field(default_factory=dict)
    # keys of internal predicates whose calls bypass the CHS
    aux_keys: Set[PredKey] = field(default_factory=set)
    # helper predicates hidden from printed models
    hidden_keys: Set[PredKey] = field(default_factory=set)
    abducible_keys: Set[PredKey] = field(default_factory=set)
    user_index: Dict[PredKey, List[Rule]] = field(default_factory=dict)
    aux_index: Dict[PredKey, List[Rule]] = field(default_factory=dict)
    constraint_origins: List[str] = field(default_factory=list)

    def all_rules(self) -> List[Rule]:
        return list(self.user_rules) + list(self.dual_rules) + list(self.nmr_rules)

    def as_program(self) -> Program:
        """The whole transformed program, printable in surface syntax."""
        p = self.program
        rules = list(self.user_rules) + (p.constraints() if p else []) + self.dual_rules + self.nmr_rules
        return Program(rules, [], dict(p.templates) if p else {}, [])

    def combining_rule(self, key: PredKey) -> Optional[Rule]:
        dk = self.dual_of.get(key)
        if dk is None:
            return None
        rules = self.aux_index.get(dk)
        return rules[0] if rules else None


def _canonical(rule: Rule) -> Tuple[Tuple[Var, ...], Tuple[Goal, ...]]:
    """Head variables and equality-prefixed body for ``rule``."""
    head_vars: List[Var] = []
    eqs: List[Goal] = []
    for i, a in enumerate(rule.head.args):
        if isinstance(a, Var) and a not in head_vars:
            head_vars.append(a)
        else:
            v = Var(f"V{i + 1}")
            head_vars.append(v)
            eqs.append(Rel(EQ, v, a))
    return tuple(head_vars), tuple(eqs) + tuple(rule.body)


def _body_only(head_vars: Sequence[Var], body: Sequence[Goal]) -> List[Var]:
    acc: List[Var] = []
    for g in body:
        goal_vars(g, acc)
    return [v for v in acc if v not in head_vars]


def _nest_forall(vs: Sequence[Var], inner: Goal) -> Goal:
    for v in reversed(vs):
        inner = Forall(v, inner)
    return inner


class _Builder:
    def __init__(self, p: Program, names: _Names, first_id: int):
        self.names = names
        self.next_id = first_id
        self.rules: List[Rule] = []

    def emit(self, head: Optional[Literal], body: Sequence[Goal], origin: str) -> Rule:
        self.next_id += 1
        r = Rule(head, tuple(body), self.next_id, origin)
        self.rules.append(r)
        return r

    def negation_family(self, name: str, head_vars: Sequence[Var], body: Sequence[Goal], origin: str) -> Goal:
        """Define ``name`` as the negation of ``body`` for fixed ``head_vars``; return its call goal."""
        ys = _body_only(head_vars, body)
        if ys:
            inner = self.names.fresh(name + "_body")
            inner_args = tuple(head_vars) + tuple(ys)
            for t in range(len(body)):
                self.emit(Literal(inner, inner_args), tuple(body[:t]) + (negate(body[t]),), origin)
            self.emit(Literal(name, tuple(head_vars)), (_nest_forall(ys, Pos(Literal(inner, inner_args))),), origin)
        else:
            for t in range(len(body)):
                self.emit(Literal(name, tuple(head_vars)), tuple(body[:t]) + (negate(body[t]),), origin)
        return Pos(Literal(name, tuple(head_vars)))


def _keys_everywhere(p: Program, extra: Sequence[Rule]) -> List[Tuple[PredKey, Literal]]:
    seen: Dict[PredKey, Literal] = {}
    for lit in iter_rule_literals(list(p.rules) + list(extra)):
        seen.setdefault(lit.key, lit)
    for q in p.queries:
        for g in q:
            for lit in _goal_literals(g):
                seen.setdefault(lit.key, lit)
    seen.pop(TRUE_KEY, None)
    return list(seen.items())


def _odd_loop_rules(rules: Sequence[Rule]) -> List[Rule]:
    """Rules whose head depends on itself through an odd number of negations."""
    edges: Dict[PredKey, List[Tuple[PredKey, int]]] = defaultdict(list)
    for r in rules:
        if r.head is None:
            continue
        for g in r.body:
            if isinstance(g, Pos):
                edges[r.head.key].append((g.literal.key, 0))
            elif isinstance(g, NafNot):
                edges[r.head.key].append((g.literal.key, 1))
    reach_cache: Dict[PredKey, Set[Tuple[PredKey, int]]] = {}

    def reach(k: PredKey) -> Set[Tuple[PredKey, int]]:
        if k not in reach_cache:
            seen = {(k, 0)}
            todo = deque(seen)
            while todo:
                node, par = todo.popleft()
                for nxt, s in edges.get(node, ()):
                    item = (nxt, par ^ s)
                    if item not in seen:
                        seen.add(item)
                        todo.append(item)
            reach_cache[k] = seen
        return reach_cache[k]

    out = []
    for r in rules:
        if r.head is None:
            continue
        h = r.head.key
        for g in r.body:
            if isinstance(g, (Pos, NafNot)):
                s = 1 if isinstance(g, NafNot) else 0
                if (h, 1 ^ s) in reach(g.literal.key):
                    out.append(r)
                    break
    return out


def build_nmr_check(p: Program, user_rules: Sequence[Rule], builder: _Builder) -> Tuple[List[Goal], List[str]]:
    """One ``forall(Z.., chk_i(Z..))`` goal per global constraint.

    Besides the written constraints, odd-loop rules and pairs ``p``/``-p``
    contribute implicit constraints that every stable model satisfies.
    """
    bodies: List[Tuple[Tuple[Goal, ...], str]] = []
    for r in p.constraints():
        bodies.append((r.body, "constraint"))
    for r in _odd_loop_rules(user_rules):
        bodies.append(((NafNot(r.head),) + tuple(r.body), "odd-loop"))
    keys = {lit.key for lit in iter_rule_literals(list(p.rules) + list(user_rules))}
    done = set()
    for lit in iter_rule_literals(list(p.rules) + list(user_rules)):
        k = lit.key
        if k[0] and (False,) + k[1:] in keys and k not in done:
            done.add(k)
            vs = tuple(Var(f"X{i + 1}") for i in range(k[2]))
            bodies.append((
                (Pos(Literal(k[1], vs)), Pos(Literal(k[1], vs, True))),
                "strong-negation",
            ))
    goals: List[Goal] = []
    origins: List[str] = []
    for i, (body, why) in enumerate(bodies, 1):
        zs: List[Var] = []
        for g in body:
            goal_vars(g, zs)
        name = builder.names.fresh(f"chk_{i}")
        call = builder.negation_family(name, zs, body, NMR)
        # the free variables are quantified around the check itself
        goals.append(_nest_forall(zs, call))
        origins.append(why)
    return goals, origins


def dualize(p: Program) -> DualProgram:
    names = _Names(_user_names(p))
    abd = desugar_abducibles(p, names)
    user_rules = [r for r in p.user_rules()] + abd
    first_id = max((r.id for r in user_rules), default=0)
    builder = _Builder(p, names, first_id)

    by_key: Dict[PredKey, List[Rule]] = {}
    for r in user_rules:
        by_key.setdefault(r.head.key, []).append(r)

    dual_of: Dict[PredKey, PredKey] = {}
    for key, lit in _keys_everywhere(p, abd):
        n = key[2]
        base = names.fresh("not_" + pred_name(key))
        vs = tuple(Var(f"V{i + 1}") for i in range(n))
        rules = by_key.get(key, [])
        parts: List[Goal] = []
        for i, r in enumerate(rules, 1):
            head_vars, body = _canonical(r)
            call = builder.negation_family(names.fresh(f"{base}_{i}"), head_vars, body, DUAL)
            parts.append(call.__class__(call.literal.with_args(vs)))
        builder.emit(Literal(base, vs), parts, DUAL)
        dual_of[key] = (False, base, n)
    dual_rules = list(builder.rules)

    nmr_goal, origins = build_nmr_check(p, user_rules, builder)
    nmr_rules = builder.rules[len(dual_rules):]

    user_index: Dict[PredKey, List[Rule]] = {}
    for r in user_rules:
        user_index.setdefault(r.head.key, []).append(r)
    aux_index: Dict[PredKey, List[Rule]] = {}
    for r in dual_rules + nmr_rules:
        aux_index.setdefault(r.head.key, []).append(r)
    # a dual family that ends up with no clauses is still an internal predicate
    aux_keys = set(aux_index) | set(dual_of.values())
    for r in dual_rules + nmr_rules:
        for g in r.body:
            for lit in _goal_literals(g):
                if lit.predicate in names.internal:
                    aux_keys.add(lit.key)
    for g in nmr_goal:
        for lit in _goal_literals(g):
            aux_keys.add(lit.key)
    hidden = {r.head.key for r in abd[1::2]}
    return DualProgram(
        user_rules=user_rules,
        dual_rules=dual_rules,
        nmr_goal=nmr_goal,
        abducible_rules=abd,
        nmr_rules=nmr_rules,
        program=p,
        dual_of=dual_of,
        aux_keys=aux_keys,
        hidden_keys=hidden,
        abducible_keys={(False, n, a) for n, a in p.abducibles},
        user_index=user_index,
        aux_index=aux_index,
        constraint_origins=origins,
    )
