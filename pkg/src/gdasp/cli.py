"""Command-line front end and corpus regression runner."""

from __future__ import annotations

import argparse
import io
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from .dual import dualize
from .engine import ALL, Solver, SolveOptions, depth_from_env
from .errors import (
    EngineError,
    ProgramError,
    ProgramSyntaxError,
    TooLargeError,
    UngroundableError,
)
from .justify import html_filename, render_html, render_nl, render_text
from .oracle import check_answer, ground, stable_models
from .parser import parse_program, parse_query
from .printer import print_program, print_query
from .terms import NafNot, Pos, Program, literal_is_ground

EXIT_OK, EXIT_NO_ANSWER, EXIT_USAGE, EXIT_ENGINE = 0, 1, 2, 3


@dataclass
class CliConfig:
    files: List[str] = field(default_factory=list)
    inline: Optional[str] = None
    query: Optional[str] = None
    max_answers: Optional[int] = 1
    tree: str = "none"
    tree_depth: Optional[int] = None
    html_dir: str = "."
    nl: bool = False
    dump_dual: bool = False
    oracle_check: bool = False
    depth_limit: int = 5000
    sort_model: bool = False


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gdasp", description="Goal-directed answer set programming.")
    ap.add_argument("files", nargs="*", help="program files (.gdasp or .pl)")
    ap.add_argument("-e", dest="inline", metavar="PROGRAM", help="program text given inline")
    ap.add_argument("-q", "--query", help="query to run instead of the queries in the files")
    ap.add_argument("-s", dest="answers", type=int, default=1, metavar="N", help="number of answers, 0 for all (default 1)")
    ap.add_argument("--tree", choices=("none", "text", "html"), default="none", help="print justification trees")
    ap.add_argument("--tree-depth", type=int, default=None, metavar="N", help="elide tree levels below N")
    ap.add_argument("--html-dir", default=".", help="directory for --tree html output")
    ap.add_argument("--nl", action="store_true", help="print natural-language justifications")
    ap.add_argument("--dump-dual", action="store_true", help="print the transformed program")
    ap.add_argument("--oracle-check", action="store_true", help="check every answer against the ground oracle")
    ap.add_argument("--depth", type=int, default=None, help="depth limit per branch (default 5000, or GDASP_DEPTH)")
    ap.add_argument("--corpus", metavar="DIR", help="run every program in DIR against its .expected file")
    ap.add_argument("--write-expected", action="store_true", help="with --corpus, regenerate the .expected files")
    return ap


def _config(ns) -> CliConfig:
    if ns.answers < 0:
        raise ValueError("-s expects a non-negative count")
    depth = ns.depth if ns.depth is not None else depth_from_env()
    if depth < 1:
        raise ValueError("--depth must be at least 1")
    return CliConfig(
        files=list(ns.files),
        inline=ns.inline,
        query=ns.query,
        max_answers=None if ns.answers == 0 else ns.answers,
        tree=ns.tree,
        tree_depth=ns.tree_depth,
        html_dir=ns.html_dir,
        nl=ns.nl,
        dump_dual=ns.dump_dual,
        oracle_check=ns.oracle_check,
        depth_limit=depth,
    )


def load_program(cfg: CliConfig) -> Program:
    prog = Program()
    errors = []
    sources: List[Tuple[str, str]] = []
    for path in cfg.files:
        sources.append((Path(path).read_text(encoding="utf-8"), path))
    if cfg.inline is not None:
        sources.append((cfg.inline, "<inline>"))
    for text, name in sources:
        try:
            prog = prog.merged(parse_program(text, name))
        except ProgramSyntaxError as e:
            errors.extend(e.errors)
    if errors:
        raise ProgramSyntaxError(errors)
    return prog


def _failure_target(query) -> Optional[object]:
    if len(query) != 1:
        return None
    g = query[0]
    if isinstance(g, (Pos, NafNot)) and literal_is_ground(g.literal):
        return NafNot(g.literal) if isinstance(g, Pos) else Pos(g.literal)
    return None


def run_query(prog: Program, dual, query, cfg: CliConfig, out: TextIO, err: TextIO) -> int:
    qtext = print_query(query)
    out.write(qtext + "\n")
    opts = SolveOptions(
        max_answers=cfg.max_answers,
        depth_limit=cfg.depth_limit,
        record_justification=cfg.tree != "none" or cfg.nl,
    )
    models = universe = None
    if cfg.oracle_check:
        gp = ground(prog, query)
        models, universe = stable_models(gp), gp.universe
    solver = Solver(dual, opts)
    count = 0
    for count, ans in enumerate(solver.solve(query), 1):
        out.write(ans.format(count, cfg.sort_model) + "\n")
        if models is not None:
            verdict = check_answer(ans, models, universe)
            out.write(f"ORACLE: {'PASS' if verdict else 'FAIL'}\n")
        _write_justification(ans, prog, qtext, count, cfg, out)
        out.write("\n")
    for d in solver.diagnostics:
        err.write(f"warning: {d}\n")
    if count:
        return EXIT_OK
    out.write("NO ANSWERS\n")
    target = _failure_target(query)
    if target is not None and (cfg.tree != "none" or cfg.nl):
        neg = Solver(dual, SolveOptions(max_answers=1, depth_limit=cfg.depth_limit))
        for ans in neg.solve((target,)):
            out.write(f"FAILURE JUSTIFICATION ({print_query((target,))[3:-1]}):\n")
            _write_justification(ans, prog, print_query((target,)), 0, cfg, out, header=False)
    out.write("\n")
    return EXIT_ENGINE if solver.depth_exceeded else EXIT_NO_ANSWER


def _write_justification(ans, prog, qtext, k, cfg, out, header=True):
    if ans.justification is None:
        return
    if cfg.tree == "text":
        if header:
            out.write("JUSTIFICATION:\n")
        text = render_text(ans.justification, cfg.tree_depth, ans.namer)
        out.write("".join("  " + line + "\n" for line in text.splitlines()))
    elif cfg.tree == "html":
        os.makedirs(cfg.html_dir, exist_ok=True)
        path = os.path.join(cfg.html_dir, html_filename(qtext, k))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_html(ans.justification, ans.namer, title=qtext))
        out.write(f"HTML: {path}\n")
    if cfg.nl:
        out.write("EXPLANATION: " + render_nl(ans.justification, prog.templates, ans.namer) + "\n")


def run_program(prog: Program, cfg: CliConfig, out: TextIO, err: TextIO) -> int:
    dual = dualize(prog)
    if cfg.dump_dual:
        out.write(print_program(dual.as_program()))
        for g in dual.nmr_goal:
            out.write(f"% check: {print_query((g,))[3:]}\n")
    if cfg.query is not None:
        queries = [tuple(parse_query(cfg.query))]
    else:
        queries = list(prog.queries)
    if not queries:
        if cfg.dump_dual:
            return EXIT_OK
        err.write("error: no query given (use -q or put ?- ... in a file)\n")
        return EXIT_USAGE
    code = EXIT_OK
    for q in queries:
        rc = run_query(prog, dual, q, cfg, out, err)
        code = max(code, rc)
    return code


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = _config(ns)
    except ValueError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    if ns.corpus:
        return run_corpus(ns.corpus, out, err, write=ns.write_expected)
    if not cfg.files and cfg.inline is None:
        err.write("error: give at least one program file or -e PROGRAM\n")
        return EXIT_USAGE
    try:
        prog = load_program(cfg)
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    except ProgramSyntaxError as e:
        for pe in e.errors:
            err.write(f"error: {pe}\n")
        return EXIT_USAGE
    try:
        return run_program(prog, cfg, out, err)
    except ProgramSyntaxError as e:
        for pe in e.errors:
            err.write(f"error: {pe}\n")
        return EXIT_USAGE
    except ProgramError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE
    except (EngineError, UngroundableError, TooLargeError) as e:
        err.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_ENGINE


# -- corpus -------------------------------------------------------------------

CORPUS_CONFIG = dict(max_answers=ALL, tree="text", sort_model=True)


def corpus_output(path: Path) -> str:
    """Normalized output for one corpus program: all answers, text trees, sorted models."""
    out, err = io.StringIO(), io.StringIO()
    cfg = CliConfig(files=[str(path)], depth_limit=depth_from_env(), **CORPUS_CONFIG)
    try:
        prog = load_program(cfg)
        code = run_program(prog, cfg, out, err)
    except (ProgramSyntaxError, ProgramError) as e:
        out.write(f"ERROR: {e}\n")
        code = EXIT_USAGE
    except (EngineError, UngroundableError, TooLargeError) as e:
        out.write(f"ERROR: {type(e).__name__}: {e}\n")
        code = EXIT_ENGINE
    out.write(f"EXIT {code}\n")
    return out.getvalue()


def first_difference(expected: str, actual: str) -> Optional[Tuple[int, str, str]]:
    exp, act = expected.splitlines(), actual.splitlines()
    for i in range(max(len(exp), len(act))):
        e = exp[i] if i < len(exp) else "<end of file>"
        a = act[i] if i < len(act) else "<end of output>"
        if e != a:
            return i + 1, e, a
    if expected != actual:
        return len(exp) + 1, "<trailing whitespace differs>", ""
    return None


def run_corpus(directory: str, out: Optional[TextIO] = None, err: Optional[TextIO] = None, write: bool = False) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    root = Path(directory)
    if not root.is_dir():
        err.write(f"error: {directory} is not a directory\n")
        return EXIT_USAGE
    programs = sorted(list(root.glob("*.gdasp")) + list(root.glob("*.pl")))
    if not programs:
        err.write("warning: 0 programs\n")
        out.write("0 programs, 0 passed, 0 failed\n")
        return EXIT_OK
    failed = 0
    for path in programs:
        actual = corpus_output(path)
        golden = path.with_suffix(".expected")
        if write:
            golden.write_text(actual, encoding="utf-8")
            out.write(f"WROTE {golden.name}\n")
            continue
        if not golden.exists():
            failed += 1
            out.write(f"FAIL {path.name}: missing golden file {golden.name}\n")
            continue
        diff = first_difference(golden.read_text(encoding="utf-8"), actual)
        if diff is None:
            out.write(f"PASS {path.name}\n")
        else:
            failed += 1
            line, e, a = diff
            out.write(f"FAIL {path.name}: {golden.name} line {line}: expected {e!r}, got {a!r}\n")
    n = len(programs)
    out.write(f"{n} programs, {n - failed} passed, {failed} failed\n")
    return EXIT_OK if failed == 0 else EXIT_NO_ANSWER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
