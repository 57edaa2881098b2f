"""Surface-syntax printing of terms, goals, rules and programs.

Output reparses to a variant-equal structure. Variables keep their source names
where those are unambiguous within one printing scope and are suffixed otherwise.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Optional, Set

from .terms import (
    Compound,
    Const,
    Forall,
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
)

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_VAR_NAME = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")
_RESERVED = {"not"}

ARG_PREC = 999
_BINARY_PREC = {"+": 500, "-": 500, "*": 400, "/": 400}
_UNARY_PREC = 200


def format_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) and name not in _RESERVED:
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def format_fraction(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class VarNamer:
    """Assigns printable names to variables, first occurrence wins."""

    def __init__(self, anonymize: bool = False, keep: Iterable[Var] = ()):
        self.names: Dict[int, str] = {}
        self.used: Set[str] = set()
        self.anonymize = anonymize
        self._anon = 0
        for v in keep:
            self._assign(v, v.name)

    def _assign(self, v: Var, base: str) -> str:
        candidate, k = base, 0
        while candidate in self.used:
            k += 1
            candidate = f"{base}_{k}"
        self.names[v.id] = candidate
        self.used.add(candidate)
        return candidate

    def __call__(self, v: Var) -> str:
        name = self.names.get(v.id)
        if name is not None:
            return name
        if self.anonymize or v.name == "_" or not _VAR_NAME.match(v.name):
            while True:
                self._anon += 1
                candidate = f"_G{self._anon}"
                if candidate not in self.used:
                    break
            self.names[v.id] = candidate
            self.used.add(candidate)
            return candidate
        return self._assign(v, v.name)


class Printer:
    def __init__(self, namer: Optional[VarNamer] = None):
        self.namer = namer or VarNamer()

    # terms

    def term(self, t: Term, max_prec: int = ARG_PREC) -> str:
        text, prec = self._term(t)
        if prec > max_prec:
            return f"({text})"
        return text

    def _term(self, t: Term):
        if isinstance(t, Var):
            return self.namer(t), 0
        if isinstance(t, Const):
            return format_atom(t.name), 0
        if isinstance(t, Num):
            q = t.value
            if q.denominator != 1:
                return format_fraction(q), _BINARY_PREC["/"]
            return str(q.numerator), (_UNARY_PREC if q < 0 else 0)
        if isinstance(t, Compound):
            if t.functor in _BINARY_PREC and len(t.args) == 2:
                prec = _BINARY_PREC[t.functor]
                left = self.term(t.args[0], prec)
                right = self.term(t.args[1], prec - 1)
                sep = f" {t.functor} " if prec == 500 else t.functor
                return f"{left}{sep}{right}", prec
            if t.functor == "-" and len(t.args) == 1:
                inner = self.term(t.args[0], _UNARY_PREC)
                if inner[:1].isdigit() or inner.startswith("-"):
                    inner = f"({inner})"
                return f"-{inner}", _UNARY_PREC
            args = ",".join(self.term(a) for a in t.args)
            return f"{format_atom(t.functor)}({args})", 0
        raise TypeError(f"not a term: {t!r}")

    # literals, goals, rules

    def literal(self, lit: Literal) -> str:
        sign = "-" if lit.strong_neg else ""
        if not lit.args:
            return sign + format_atom(lit.predicate)
        return f"{sign}{format_atom(lit.predicate)}({','.join(self.term(a) for a in lit.args)})"

    def goal(self, g: Goal) -> str:
        if isinstance(g, Pos):
            return self.literal(g.literal)
        if isinstance(g, NafNot):
            return "not " + self.literal(g.literal)
        if isinstance(g, Rel):
            return f"{self.term(g.lhs)} {g.op} {self.term(g.rhs)}"
        if isinstance(g, Forall):
            return f"forall({self.namer(g.var)}, {self.goal(g.body)})"
        raise TypeError(f"not a goal: {g!r}")

    def rule(self, r: Rule) -> str:
        head = "false" if r.head is None else self.literal(r.head)
        if not r.body:
            return head + "."
        return f"{head} :- {', '.join(self.goal(g) for g in r.body)}."


def print_term(t: Term) -> str:
    return Printer().term(t)


def print_literal(lit: Literal) -> str:
    return Printer().literal(lit)


def print_goal(g: Goal) -> str:
    return Printer().goal(g)


def print_rule(r: Rule) -> str:
    return Printer().rule(r)


def print_query(goals) -> str:
    p = Printer()
    return "?- " + ", ".join(p.goal(g) for g in goals) + "."


def print_program(prog: Program) -> str:
    lines = []
    for t in prog.templates.values():
        p = Printer()
        lit = Literal(t.key[1], t.params, t.key[0])
        pattern = t.pattern.replace("\\", "\\\\").replace("'", "\\'")
        lines.append(f"#pred {p.literal(lit)} :: '{pattern}'.")
    for name, arity in prog.abducibles:
        lines.append(f"#abducible {format_atom(name)}/{arity}.")
    for r in prog.rules:
        lines.append(print_rule(r))
    for q in prog.queries:
        lines.append(print_query(q))
    return "\n".join(lines) + ("\n" if lines else "")
