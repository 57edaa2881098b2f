"""Recursive-descent parser for the program surface syntax.

Grammar summary (see docs/syntax.md for the full EBNF)::

    program   ::= statement*
    statement ::= clause | constraint | query | directive
    clause    ::= literal [':-' goals] '.'
    constraint::= ['false'] ':-' goals '.'
    query     ::= '?-' goals '.'
    directive ::= '#abducible' (name ['/' int] | literal) '.'
                | '#pred' literal '::' quoted '.'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, ProgramSyntaxError
from .terms import (
    ARITH_FUNCTORS,
    Compound,
    Const,
    Forall,
    Goal,
    Literal,
    NafNot,
    Num,
    Pos,
    Program,
    REL_OPS,
    Rel,
    Rule,
    SourceSpan,
    Template,
    Term,
    Var,
    fresh_id,
)

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"%[^\n]*"),
    ("NUM", r"\d+(?:\.\d+)?"),
    ("VAR", r"[A-Z_][A-Za-z0-9_]*"),
    ("ATOM", r"[a-z][A-Za-z0-9_]*"),
    ("QATOM", r"'(?:[^'\\\n]|\\.)*'"),
    ("END", r"\.(?=\s|%|\Z)"),
    ("SYM", r":-|\?-|::|\\=|=<|>=|!=|≠|≤|≥|[()\[\],#<>=+\-*/|]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))
_SYM_ALIASES = {"≠": "\\=", "!=": "\\=", "≤": "=<", "≥": ">="}
_SLOT_RE = re.compile(r"@\(([A-Z_][A-Za-z0-9_]*)\)")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


class _Fail(Exception):
    def __init__(self, error: ParseError):
        self.error = error


def tokenize(text: str, file: str = "<string>") -> Tuple[List[Token], List[ParseError]]:
    tokens: List[Token] = []
    errors: List[ParseError] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            errors.append(ParseError(SourceSpan(file, line, col), f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind, value = m.lastgroup, m.group()
        if kind not in ("WS", "COMMENT"):
            if kind == "SYM":
                value = _SYM_ALIASES.get(value, value)
            elif kind == "QATOM":
                value = re.sub(r"\\(.)", r"\1", value[1:-1])
            tokens.append(Token(kind, value, line, col))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens, errors


class Parser:
    def __init__(self, text: str, file: str = "<string>", allow_forall: bool = False):
        self.file = file
        self.allow_forall = allow_forall
        self.tokens, self.errors = tokenize(text, file)
        self.pos = 0
        self.scope: Dict[str, Var] = {}
        self.next_rule_id = 1

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def span(self, tok: Optional[Token] = None) -> SourceSpan:
        tok = tok or self.tok
        return SourceSpan(self.file, tok.line, tok.column)

    def fail(self, message: str, expected=(), tok: Optional[Token] = None):
        raise _Fail(ParseError(self.span(tok), message, frozenset(expected)))

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_sym(self, *texts: str) -> bool:
        return self.tok.kind == "SYM" and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect_sym(self, text: str) -> Token:
        if not self.at_sym(text):
            self.fail(f"expected '{text}' but found {self._describe(self.tok)}", {f"'{text}'"})
        return self.advance()

    def expect_end(self):
        if not self.at("END"):
            found = "end of input" if self.at("EOF") else self._describe(self.tok)
            self.fail(f"expected '.' but found {found}", {"'.'"})
        self.advance()

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind == "EOF":
            return "end of input"
        if tok.kind == "END":
            return "'.'"
        return repr(tok.text)

    def recover(self):
        while not self.at("EOF") and not self.at("END"):
            self.advance()
        self.advance()

    # -- program

    def parse_program(self) -> Program:
        prog = Program()
        while not self.at("EOF"):
            start = self.pos
            self.scope = {}
            try:
                self._statement(prog)
            except _Fail as f:
                self.errors.append(f.error)
                if self.pos == start and self.at("END"):
                    self.advance()
                else:
                    self.recover()
        if self.errors:
            raise ProgramSyntaxError(self.errors)
        return prog

    def _statement(self, prog: Program):
        first = self.tok
        if self.at_sym("#"):
            self._directive(prog)
        elif self.at_sym("?-"):
            self.advance()
            prog.queries.append(self._goal_list())
            self.expect_end()
        elif self.at_sym(":-"):
            self.advance()
            body = self._goal_list()
            self.expect_end()
            prog.rules.append(self._rule(None, body, first))
        else:
            head_tok = self.tok
            head = self._literal()
            if not head.strong_neg and head.predicate == "false" and not head.args and head_tok.kind == "ATOM":
                if self.at_sym(":-"):
                    self.advance()
                    body = self._goal_list()
                else:
                    body = ()
                self.expect_end()
                prog.rules.append(self._rule(None, body, first))
                return
            body: Tuple[Goal, ...] = ()
            if self.at_sym(":-"):
                self.advance()
                body = self._goal_list()
            self.expect_end()
            prog.rules.append(self._rule(head, body, first))

    def _rule(self, head, body, tok: Token) -> Rule:
        r = Rule(head, tuple(body), self.next_rule_id, span=self.span(tok))
        self.next_rule_id += 1
        return r

    def _directive(self, prog: Program):
        self.expect_sym("#")
        if not self.at("ATOM"):
            self.fail("expected a directive name", {"abducible", "pred"})
        name_tok = self.advance()
        if name_tok.text == "abducible":
            t = self._expr()
            if isinstance(t, Compound) and t.functor == "/" and len(t.args) == 2:
                name, arity = t.args
                if not isinstance(name, Const) or not isinstance(arity, Num) or arity.value.denominator != 1:
                    self.fail("malformed abducible declaration; use name/arity", tok=name_tok)
                key = (name.name, int(arity.value))
            elif isinstance(t, Num):
                # `p/1` where p is a quoted-free atom folds nothing; numbers alone are invalid
                self.fail("abducible must name a predicate", tok=name_tok)
            else:
                lit = self._as_literal(t, name_tok)
                if lit.strong_neg:
                    self.fail("abducibles cannot be strongly negated", tok=name_tok)
                key = (lit.predicate, lit.arity)
            self.expect_end()
            if key not in prog.abducibles:
                prog.abducibles.append(key)
        elif name_tok.text == "pred":
            lit_tok = self.tok
            lit = self._literal()
            params = []
            for a in lit.args:
                if not isinstance(a, Var) or a in params:
                    self.fail("template head arguments must be distinct variables", tok=lit_tok)
                params.append(a)
            self.expect_sym("::")
            if not self.at("QATOM"):
                self.fail("expected a quoted template", {"quoted atom"})
            pattern_tok = self.advance()
            known = {p.name for p in params}
            for slot in _SLOT_RE.findall(pattern_tok.text):
                if slot not in known:
                    self.fail(f"unknown template slot @({slot})", tok=pattern_tok)
            self.expect_end()
            prog.templates[lit.key] = Template(lit.key, tuple(params), pattern_tok.text)
        else:
            self.fail(f"unknown directive #{name_tok.text}", {"abducible", "pred"}, tok=name_tok)

    # -- goals

    def _goal_list(self) -> Tuple[Goal, ...]:
        goals = [self._goal()]
        while self.at_sym(","):
            self.advance()
            goals.append(self._goal())
        return tuple(goals)

    def _goal(self) -> Goal:
        if self.at("ATOM", "not") and self.tokens[self.pos + 1].kind in ("ATOM", "QATOM", "SYM"):
            nxt = self.tokens[self.pos + 1]
            if nxt.kind != "SYM" or nxt.text in ("-", "("):
                self.advance()
                return NafNot(self._literal())
        if self._at_forall():
            if not self.allow_forall:
                self.fail("forall is reserved for generated programs; write the rule with not instead")
            self.advance()
            self.advance()
            var = self._primary()
            self.expect_sym(",")
            body = self._goal()
            self.expect_sym(")")
            return Forall(var, body)
        start = self.tok
        lhs = self._expr()
        if self.tok.kind == "SYM" and self.tok.text in REL_OPS:
            op = self.advance().text
            rhs = self._expr()
            return Rel(op, lhs, rhs)
        return Pos(self._as_literal(lhs, start))

    def _at_forall(self) -> bool:
        # forall(V, Goal) with V a variable; anything else is an ordinary literal
        t = self.tokens[self.pos : self.pos + 4]
        return (
            len(t) == 4
            and t[0].kind == "ATOM"
            and t[0].text == "forall"
            and t[1].text == "("
            and t[1].column == t[0].column + 6
            and t[2].kind == "VAR"
            and t[3].text == ","
        )

    def _literal(self) -> Literal:
        start = self.tok
        return self._as_literal(self._expr(), start)

    def _as_literal(self, t: Term, tok: Token) -> Literal:
        neg = False
        if isinstance(t, Compound) and t.functor == "-" and len(t.args) == 1:
            neg, t = True, t.args[0]
        if isinstance(t, Const):
            return Literal(t.name, (), neg)
        if isinstance(t, Compound) and not (t.functor in ARITH_FUNCTORS and len(t.args) <= 2 and tok.kind != "QATOM"):
            return Literal(t.functor, t.args, neg)
        self.fail("expected a literal", {"atom", "compound term"}, tok=tok)

    # -- terms and arithmetic

    def _expr(self) -> Term:
        left = self._mul()
        while self.at_sym("+", "-"):
            op = self.advance().text
            left = Compound(op, (left, self._mul()))
        return left

    def _mul(self) -> Term:
        left = self._unary()
        while self.at_sym("*", "/"):
            op_tok = self.advance()
            right = self._unary()
            if op_tok.text == "/" and isinstance(left, Num) and isinstance(right, Num):
                if right.value == 0:
                    self.fail("division by zero", tok=op_tok)
                left = Num(left.value / right.value)
            else:
                left = Compound(op_tok.text, (left, right))
        return left

    def _unary(self) -> Term:
        if self.at_sym("-"):
            self.advance()
            inner = self._unary()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Compound("-", (inner,))
        return self._primary()

    def _primary(self) -> Term:
        tok = self.tok
        if tok.kind == "NUM":
            self.advance()
            return Num(Fraction(tok.text))
        if tok.kind == "VAR":
            self.advance()
            if tok.text == "_":
                return Var("_", fresh_id())
            v = self.scope.get(tok.text)
            if v is None:
                v = self.scope[tok.text] = Var(tok.text, fresh_id())
            return v
        if tok.kind in ("ATOM", "QATOM"):
            self.advance()
            if self.at_sym("(") and self.tok.column == tok.column + len(self._raw_text(tok)):
                self.advance()
                args = [self._expr()]
                while self.at_sym(","):
                    self.advance()
                    args.append(self._expr())
                self.expect_sym(")")
                return Compound(tok.text, tuple(args))
            return Const(tok.text)
        if self.at_sym("("):
            self.advance()
            inner = self._expr()
            self.expect_sym(")")
            return inner
        if tok.kind == "SYM" and tok.text == "," and self.tokens[self.pos - 1].text in (",", "("):
            self.fail("empty argument", {"term"})
        self.fail(f"expected a term but found {self._describe(tok)}", {"term"})

    @staticmethod
    def _raw_text(tok: Token) -> str:
        if tok.kind == "QATOM":
            return "'" + tok.text.replace("\\", "\\\\").replace("'", "\\'") + "'"
        return tok.text


def parse_program(text: str, file: str = "<string>", allow_forall: bool = False) -> Program:
    """Parse program text; raises ProgramSyntaxError listing every syntax fault found.

    ``allow_forall`` admits ``forall(V, G)`` goals, as printed by ``--dump-dual``.
    """
    return Parser(text, file, allow_forall).parse_program()


def parse_query(text: str, file: str = "<query>") -> Tuple[Goal, ...]:
    """Parse ``?- g1, ..., gn.``; the ``?-`` prefix and final period may be omitted."""
    p = Parser(text, file)
    if p.errors:
        raise ProgramSyntaxError(p.errors)
    try:
        if p.at_sym("?-"):
            p.advance()
        if p.at("END") or p.at("EOF"):
            p.fail("empty query", {"goal"})
        goals = p._goal_list()
        if p.at("END"):
            p.advance()
        if not p.at("EOF"):
            p.fail(f"unexpected {p._describe(p.tok)} after query", {"','", "'.'"})
    except _Fail as f:
        raise ProgramSyntaxError([f.error]) from None
    return goals


def parse_term(text: str) -> Term:
    p = Parser(text, "<term>")
    try:
        t = p._expr()
        if not p.at("EOF"):
            p.fail(f"unexpected {p._describe(p.tok)}")
    except _Fail as f:
        raise ProgramSyntaxError([f.error]) from None
    return t
