"""Terms, literals, goals, rules and programs, plus substitution helpers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

_ids = itertools.count(1)


def fresh_id() -> int:
    return next(_ids)


@dataclass(frozen=True)
class Var:
    """Logic variable. Identity is the integer id; the name is for printing only."""

    name: str = field(compare=False)
    id: int = field(default_factory=fresh_id)

    def __repr__(self):
        return f"{self.name}#{self.id}"


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __repr__(self):
        return str(self.value)


@dataclass(frozen=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError(f"compound {self.functor!r} needs at least one argument; use Const")

    def __repr__(self):
        return f"{self.functor}({', '.join(map(repr, self.args))})"


Term = Union[Var, Const, Num, Compound]

ARITH_FUNCTORS = frozenset({"+", "-", "*", "/"})


def fresh_var(name: str = "_") -> Var:
    return Var(name, fresh_id())


# -- literals and goals -------------------------------------------------------

PredKey = Tuple[bool, str, int]


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: Tuple[Term, ...] = ()
    strong_neg: bool = False

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def key(self) -> PredKey:
        return (self.strong_neg, self.predicate, len(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def with_args(self, args) -> "Literal":
        return Literal(self.predicate, tuple(args), self.strong_neg)

    def complement(self) -> "Literal":
        """The classically negated counterpart: p(t) <-> -p(t)."""
        return Literal(self.predicate, self.args, not self.strong_neg)


@dataclass(frozen=True)
class Pos:
    literal: Literal


@dataclass(frozen=True)
class NafNot:
    """Default negation: ``not L``."""

    literal: Literal


EQ, NE, LT, LE, GT, GE = "=", "\\=", "<", "=<", ">", ">="
REL_OPS = (EQ, NE, LT, LE, GT, GE)
COMPLEMENT_OP = {EQ: NE, NE: EQ, LT: GE, GE: LT, GT: LE, LE: GT}


@dataclass(frozen=True)
class Rel:
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in REL_OPS:
            raise ValueError(f"unknown relation {self.op!r}")


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Goal"


Goal = Union[Pos, NafNot, Rel, Forall]

TRUE_KEY: PredKey = (False, "true", 0)


# -- rules and programs -------------------------------------------------------


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


USER, DUAL, NMR, ABDUCIBLE = "user", "dual", "nmr", "abducible-desugar"


@dataclass(frozen=True)
class Rule:
    """``head :- body``. A ``None`` head is the distinguished FALSE head of a global constraint."""

    head: Optional[Literal]
    body: Tuple[Goal, ...] = ()
    id: int = 0
    origin: str = USER
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body


@dataclass(frozen=True)
class Template:
    """Natural-language rendering pattern for one predicate; ``@(X)`` marks a slot."""

    key: PredKey
    params: Tuple[Var, ...]
    pattern: str


@dataclass
class Program:
    rules: List[Rule] = field(default_factory=list)
    abducibles: List[Tuple[str, int]] = field(default_factory=list)
    templates: Dict[PredKey, Template] = field(default_factory=dict)
    queries: List[Tuple[Goal, ...]] = field(default_factory=list)

    def user_rules(self) -> List[Rule]:
        return [r for r in self.rules if not r.is_constraint]

    def constraints(self) -> List[Rule]:
        return [r for r in self.rules if r.is_constraint]

    def merged(self, other: "Program") -> "Program":
        """Concatenate two programs, renumbering ``other``'s rule ids after ours."""
        offset = max((r.id for r in self.rules), default=0)
        rules = list(self.rules) + [
            Rule(r.head, r.body, r.id + offset, r.origin, r.span) for r in other.rules
        ]
        abducibles = list(self.abducibles) + [a for a in other.abducibles if a not in self.abducibles]
        templates = {**self.templates, **other.templates}
        return Program(rules, abducibles, templates, list(self.queries) + list(other.queries))


# -- traversal ----------------------------------------------------------------


def term_vars(t: Term, acc: Optional[List[Var]] = None) -> List[Var]:
    """Variables of ``t`` in first-occurrence order, without duplicates."""
    if acc is None:
        acc = []
    if isinstance(t, Var):
        if t not in acc:
            acc.append(t)
    elif isinstance(t, Compound):
        for a in t.args:
            term_vars(a, acc)
    return acc


def literal_vars(lit: Literal, acc=None) -> List[Var]:
    if acc is None:
        acc = []
    for a in lit.args:
        term_vars(a, acc)
    return acc


def goal_vars(g: Goal, acc=None) -> List[Var]:
    if acc is None:
        acc = []
    if isinstance(g, (Pos, NafNot)):
        literal_vars(g.literal, acc)
    elif isinstance(g, Rel):
        term_vars(g.lhs, acc)
        term_vars(g.rhs, acc)
    elif isinstance(g, Forall):
        if g.var not in acc:
            acc.append(g.var)
        goal_vars(g.body, acc)
    return acc


def rule_vars(r: Rule) -> List[Var]:
    acc: List[Var] = []
    if r.head is not None:
        literal_vars(r.head, acc)
    for g in r.body:
        goal_vars(g, acc)
    return acc


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


def literal_is_ground(lit: Literal) -> bool:
    return all(is_ground(a) for a in lit.args)


def occurs(v: Var, t: Term) -> bool:
    if isinstance(t, Var):
        return t == v
    if isinstance(t, Compound):
        return any(occurs(v, a) for a in t.args)
    return False


# -- substitution -------------------------------------------------------------

Substitution = Mapping[Var, Term]


def apply_substitution(t: Term, s: Substitution) -> Term:
    """Replace bound variables recursively until no bound variable remains."""
    if isinstance(t, Var):
        bound = s.get(t)
        if bound is None:
            return t
        return apply_substitution(bound, s)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply_substitution(a, s) for a in t.args))
    return t


def subst_literal(lit: Literal, s: Substitution) -> Literal:
    return lit.with_args(apply_substitution(a, s) for a in lit.args)


def subst_goal(g: Goal, s: Substitution) -> Goal:
    if isinstance(g, Pos):
        return Pos(subst_literal(g.literal, s))
    if isinstance(g, NafNot):
        return NafNot(subst_literal(g.literal, s))
    if isinstance(g, Rel):
        return Rel(g.op, apply_substitution(g.lhs, s), apply_substitution(g.rhs, s))
    if isinstance(g, Forall):
        var = apply_substitution(g.var, s)
        if not isinstance(var, Var):
            # the quantified variable is never bound from outside; keep it
            var = g.var
            s = {k: v for k, v in s.items() if k != g.var}
        return Forall(var, subst_goal(g.body, s))
    raise TypeError(f"not a goal: {g!r}")


def subst_rule(r: Rule, s: Substitution) -> Rule:
    head = subst_literal(r.head, s) if r.head is not None else None
    return Rule(head, tuple(subst_goal(g, s) for g in r.body), r.id, r.origin, r.span)


def rename_apart(r: Rule) -> Rule:
    """A variant of ``r`` whose variables are all fresh."""
    vs = rule_vars(r)
    if not vs:
        return r
    return subst_rule(r, {v: Var(v.name, fresh_id()) for v in vs})


def is_variant(a, b) -> bool:
    """True iff a bijective variable renaming maps ``a`` onto ``b``.

    Works on terms and literals; strong negation and predicate must agree.
    """
    if isinstance(a, Literal) or isinstance(b, Literal):
        if not (isinstance(a, Literal) and isinstance(b, Literal)) or a.key != b.key:
            return False
        pairs = list(zip(a.args, b.args))
    else:
        pairs = [(a, b)]
    fwd: Dict[int, int] = {}
    back: Dict[int, int] = {}
    while pairs:
        x, y = pairs.pop()
        if isinstance(x, Var) or isinstance(y, Var):
            if not (isinstance(x, Var) and isinstance(y, Var)):
                return False
            if fwd.setdefault(x.id, y.id) != y.id or back.setdefault(y.id, x.id) != x.id:
                return False
        elif isinstance(x, Compound):
            if not isinstance(y, Compound) or x.functor != y.functor or len(x.args) != len(y.args):
                return False
            pairs.extend(zip(x.args, y.args))
        elif x != y:
            return False
    return True


def walk_terms(g: Goal) -> Iterator[Term]:
    if isinstance(g, (Pos, NafNot)):
        yield from g.literal.args
    elif isinstance(g, Rel):
        yield g.lhs
        yield g.rhs
    elif isinstance(g, Forall):
        yield g.var
        yield from walk_terms(g.body)


def goal_literal(g: Goal) -> Optional[Literal]:
    return g.literal if isinstance(g, (Pos, NafNot)) else None


def iter_rule_literals(rules: Iterable[Rule]) -> Iterator[Literal]:
    for r in rules:
        if r.head is not None:
            yield r.head
        for g in r.body:
            lit = goal_literal(g)
            if lit is not None:
                yield lit
