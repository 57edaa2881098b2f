"""gdasp: goal-directed answer set programming.

Programs are solved top-down from a query, without grounding. Default
negation is handled through dual rules, loops through a coinductive
hypothesis set, and arithmetic through exact rational constraints.
"""

from .constraints import ConstraintStore, add_diseq, add_linear, project, unify
from .dual import DualProgram, build_nmr_check, desugar_abducibles, dualize, negate_builtin
from .engine import ALL, Answer, LoopClass, SolveOptions, Solver, classify_loop, count_models, solve
from .errors import (
    ForallUnsupportedError,
    GdaspError,
    NonlinearConstraintError,
    NotRecordedError,
    ParseError,
    ProgramError,
    ProgramSyntaxError,
    TooLargeError,
    UngroundableError,
)
from .justify import ProofNode, build_justification, render_html, render_nl, render_text
from .oracle import GroundProgram, check_answer, ground, stable_models
from .parser import parse_program, parse_query, parse_term
from .printer import print_program, print_query, print_rule, print_term
from .terms import (
    Compound,
    Const,
    Forall,
    Literal,
    NafNot,
    Num,
    Pos,
    Program,
    Rel,
    Rule,
    Var,
    apply_substitution,
    is_variant,
    rename_apart,
)

__version__ = "0.1.0"

__all__ = [
    "ALL",
    "Answer",
    "Compound",
    "Const",
    "ConstraintStore",
    "DualProgram",
    "Forall",
    "ForallUnsupportedError",
    "GdaspError",
    "GroundProgram",
    "Literal",
    "LoopClass",
    "NafNot",
    "NonlinearConstraintError",
    "NotRecordedError",
    "Num",
    "ParseError",
    "Pos",
    "Program",
    "ProgramError",
    "ProgramSyntaxError",
    "ProofNode",
    "Rel",
    "Rule",
    "SolveOptions",
    "Solver",
    "TooLargeError",
    "UngroundableError",
    "Var",
    "add_diseq",
    "add_linear",
    "apply_substitution",
    "build_justification",
    "build_nmr_check",
    "check_answer",
    "classify_loop",
    "count_models",
    "desugar_abducibles",
    "dualize",
    "ground",
    "is_variant",
    "negate_builtin",
    "parse_program",
    "parse_query",
    "parse_term",
    "print_program",
    "print_query",
    "print_rule",
    "print_term",
    "project",
    "rename_apart",
    "render_html",
    "render_nl",
    "render_text",
    "solve",
    "stable_models",
    "unify",
]
