"""Proof trees: recording shape, and text / HTML / natural-language rendering."""

from __future__ import annotations

import hashlib
import html
import re
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple, Union

from .errors import NotRecordedError
from .printer import Printer, VarNamer
from .terms import (
    USER,
    Forall,
    Goal,
    Literal,
    NafNot,
    Pos,
    PredKey,
    Rel,
    Template,
)

FACT, RULE, COINDUCTIVE, CHS_REUSE, CONSTRAINT, FORALL, BUILTIN = (
    "fact",
    "rule",
    "coinductive",
    "chs-reuse",
    "constraint-check",
    "forall",
    "builtin",
)
QUERY, NMR_NODE = "query", "nmr"
LEAF_KINDS = frozenset({FACT, COINDUCTIVE, CHS_REUSE, BUILTIN})

NMR_LABEL = "global constraints hold"


@dataclass(frozen=True)
class ProofNode:
    goal: Union[Goal, Tuple[Goal, ...], str]
    kind: str
    children: Tuple["ProofNode", ...] = ()
    rule_id: Optional[int] = None
    origin: str = USER
    aux: bool = False

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def map_goals(node: ProofNode, fn: Callable[[Goal], Goal]) -> ProofNode:
    goal = node.goal
    if isinstance(goal, tuple):
        goal = tuple(fn(g) for g in goal)
    elif not isinstance(goal, str):
        goal = fn(goal)
    return replace(node, goal=goal, children=tuple(map_goals(c, fn) for c in node.children))


def splice_aux(node: ProofNode) -> ProofNode:
    """Drop internal dual/check nodes, lifting their children into the parent."""
    kids: List[ProofNode] = []
    for c in node.children:
        c = splice_aux(c)
        if c.aux:
            kids.extend(c.children)
        else:
            kids.append(c)
    return replace(node, children=tuple(kids))


def build_justification(answer) -> ProofNode:
    if answer is None or answer.justification is None:
        raise NotRecordedError("solve ran without recording justifications")
    return answer.justification


# -- rendering ----------------------------------------------------------------


def _goal_text(p: Printer, goal) -> str:
    if isinstance(goal, str):
        return goal
    if isinstance(goal, tuple):
        return ", ".join(p.goal(g) for g in goal) if goal else "true"
    return p.goal(goal)


def kind_label(node: ProofNode) -> str:
    if node.kind == RULE:
        return f"rule({node.rule_id})" if node.rule_id is not None else "rule"
    if node.kind == COINDUCTIVE:
        return "assumed"
    return node.kind


def _line(p: Printer, node: ProofNode) -> str:
    return f"{_goal_text(p, node.goal)} ← {kind_label(node)}"


def _count(node: ProofNode) -> int:
    return 1 + sum(_count(c) for c in node.children)


def render_text(t: ProofNode, max_depth: Optional[int] = None, namer: Optional[VarNamer] = None) -> str:
    """Two-space indented ``goal <- kind`` lines. Levels below ``max_depth`` are elided."""
    p = Printer(namer or VarNamer())
    lines: List[str] = []

    def go(node: ProofNode, depth: int):
        pad = "  " * depth
        lines.append(pad + _line(p, node))
        if not node.children:
            return
        if max_depth is not None and depth >= max_depth:
            hidden = sum(_count(c) for c in node.children)
            lines.append(f"{pad}  … (+{hidden} hidden)")
            return
        for c in node.children:
            go(c, depth + 1)

    go(t, 0)
    return "\n".join(lines) + "\n"


_HTML_HEAD = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8"/>
<title>{title}</title>
<style>
body {{ font-family: monospace; }}
details {{ margin-left: 2em; }}
.leaf {{ margin-left: 2em; }}
summary {{ cursor: pointer; }}
</style>
</head>
<body>
"""


def render_html(t: ProofNode, namer: Optional[VarNamer] = None, title: str = "justification") -> str:
    """Self-contained document; nested ``<details>`` mirror the tree."""
    p = Printer(namer or VarNamer())
    out = [_HTML_HEAD.format(title=html.escape(title))]

    def go(node: ProofNode):
        text = html.escape(_line(p, node))
        if node.children:
            out.append(f"<details open=\"open\"><summary>{text}</summary>\n")
            for c in node.children:
                go(c)
            out.append("</details>\n")
        else:
            out.append(f"<div class=\"leaf\">{text}</div>\n")

    go(t)
    out.append("</body>\n</html>\n")
    return "".join(out)


def html_filename(query_text: str, k: int) -> str:
    digest = hashlib.sha256(query_text.encode("utf-8")).hexdigest()[:12]
    return f"{digest}-answer{k}.html"


_SLOT = re.compile(r"@\(([A-Z_][A-Za-z0-9_]*)\)")


def _nl_literal(p: Printer, lit: Literal, templates: Dict[PredKey, Template]) -> str:
    tpl = templates.get(lit.key)
    if tpl is None:
        return f"'{p.literal(lit)}' holds"
    slots = {v.name: a for v, a in zip(tpl.params, lit.args)}
    return _SLOT.sub(lambda m: p.term(slots[m.group(1)]) if m.group(1) in slots else m.group(0), tpl.pattern)


def _nl_goal(p: Printer, goal, templates) -> str:
    if isinstance(goal, str):
        return goal
    if isinstance(goal, tuple):
        return " and ".join(_nl_goal(p, g, templates) for g in goal) if goal else "true holds"
    if isinstance(goal, Pos):
        return _nl_literal(p, goal.literal, templates)
    if isinstance(goal, NafNot):
        return "there is no evidence that " + _nl_literal(p, goal.literal, templates)
    if isinstance(goal, Rel):
        return f"'{p.goal(goal)}' holds"
    if isinstance(goal, Forall):
        return f"for every {p.namer(goal.var)}, " + _nl_goal(p, goal.body, templates)
    return str(goal)


def render_nl(t: ProofNode, templates: Optional[Dict[PredKey, Template]] = None, namer: Optional[VarNamer] = None) -> str:
    """One sentence per tree: ``goal because child and child``, nested children in parentheses."""
    p = Printer(namer or VarNamer())
    templates = templates or {}

    def go(node: ProofNode, top: bool) -> str:
        head = _nl_goal(p, node.goal, templates)
        kids = [go(c, False) for c in node.children]
        if not kids:
            return head
        body = " and ".join(kids)
        if not top and len(node.children) > 0 and any(c.children for c in node.children):
            return f"{head} because ({body})"
        return f"{head} because {body}"

    if t.kind != QUERY:
        return go(t, True)
    # the query root adds nothing beyond its children; the global check is summarized
    parts = [NMR_LABEL if c.kind == NMR_NODE else go(c, True) for c in t.children]
    return "; and ".join(parts) if parts else _nl_goal(p, t.goal, templates)
