"""Goal-directed solver over user and dual rules.

Resolution is depth-first and left to right. Each call of a user-level
literal is checked against the coinductive hypothesis set (proved entries) and
the ancestor chain before it is expanded, so even loops over negation succeed
coinductively and odd loops fail. After the query succeeds, the global
constraint checks run against the same hypothesis set.
"""

from __future__ import annotations

import enum
import os
import queue
import sys
import threading
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from .constraints import (
    EMPTY,
    ConstraintStore,
    Relation,
    add_diseq,
    add_linear,
    diseqs_on,
    drop_var_constraints,
    is_arith,
    project,
    unify,
    unify_args,
)
from .dual import DualProgram, dualize
from .errors import ForallUnsupportedError
from .justify import (
    BUILTIN,
    CHS_REUSE,
    COINDUCTIVE,
    CONSTRAINT,
    FACT,
    FORALL,
    NMR_LABEL,
    NMR_NODE,
    QUERY,
    RULE,
    ProofNode,
    map_goals,
    splice_aux,
)
from .parser import parse_query
from .printer import Printer, VarNamer
from .terms import (
    EQ,
    NE,
    TRUE_KEY,
    Forall,
    Goal,
    Literal,
    NafNot,
    Pos,
    Program,
    Rel,
    Term,
    Var,
    fresh_id,
    goal_vars,
    is_ground,
    is_variant,
    iter_rule_literals,
    literal_is_ground,
    rename_apart,
    subst_goal,
)

POS, NEG = "+", "-"
ALL = None
DEFAULT_DEPTH = 5000


class LoopClass(enum.Enum):
    POSITIVE = "positive"
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


@dataclass
class SolveOptions:
    max_answers: Optional[int] = ALL
    depth_limit: int = DEFAULT_DEPTH
    record_justification: bool = True

    def __post_init__(self):
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be at least 1")
        if self.max_answers is not None and self.max_answers < 1:
            raise ValueError("max_answers must be positive or ALL")


@dataclass(frozen=True)
class Decide:
    """Internal goal: prove ``literal`` or, failing that, its default negation."""

    literal: Literal


@dataclass(frozen=True)
class Frame:
    sign: str
    literal: Literal
    switches: int
    parent: Optional["Frame"]


# proved entries in discovery order
CHS = Tuple[Tuple[str, Literal], ...]
State = Tuple[ConstraintStore, CHS]


def _model_order(text: str):
    # keep `not p` next to `p` when sorting printed model literals
    return (text[4:], 1) if text.startswith("not ") else (text, 0)


@dataclass
class Answer:
    model: Tuple[Goal, ...]
    bindings: Tuple[Tuple[Var, Term], ...]
    residue: Tuple[Relation, ...]
    justification: Optional[ProofNode]
    abduced: Tuple[Literal, ...]
    query: Tuple[Goal, ...] = ()
    store: ConstraintStore = EMPTY
    chs: CHS = ()
    namer: VarNamer = field(default_factory=VarNamer)
    raw_justification: Optional[ProofNode] = None

    def binding_lines(self) -> List[str]:
        p = Printer(self.namer)
        return [f"{p.term(v)} = {p.term(t)}" for v, t in self.bindings]

    def residue_lines(self) -> List[str]:
        p = Printer(self.namer)
        return [f"{p.term(r.lhs)} {r.op} {p.term(r.rhs)}" for r in self.residue]

    def model_strings(self) -> List[str]:
        p = Printer(self.namer)
        return [p.goal(g) for g in self.model]

    def format(self, k: int, sort_model: bool = False) -> str:
        lines = [f"ANSWER {k}", "BINDINGS:"]
        lines += ["  " + s for s in self.binding_lines()]
        lines.append("CONSTRAINTS:")
        lines += ["  " + s for s in self.residue_lines()]
        model = self.model_strings()
        if sort_model:
            model = sorted(model, key=_model_order)
        lines.append("MODEL: { " + ", ".join(model) + " }" if model else "MODEL: { }")
        return "\n".join(lines)

    def key(self) -> str:
        return "\n".join(self.binding_lines() + ["|"] + self.residue_lines() + ["|"] + sorted(self.model_strings()))


def classify_loop(sign: str, literal: Literal, path: Optional[Frame], store: ConstraintStore = EMPTY) -> LoopClass:
    """Classify a call against its nearest variant ancestor on ``path``."""
    cur = _switches(path, sign)
    rl = _resolve_lit(literal, store)
    f = path
    while f is not None:
        if f.literal.key == rl.key and is_variant(_resolve_lit(f.literal, store), rl):
            if f.sign != sign:
                return LoopClass.ODD
            return LoopClass.POSITIVE if cur == f.switches else LoopClass.EVEN
        f = f.parent
    return LoopClass.NONE


def _switches(path: Optional[Frame], sign: str) -> int:
    if path is None:
        return 0 if sign == POS else 1
    return path.switches + (path.sign != sign)


def _resolve_lit(lit: Literal, store: ConstraintStore) -> Literal:
    if not lit.args:
        return lit
    return lit.with_args(store.resolve(a) for a in lit.args)


def _signed(sign: str, lit: Literal) -> Goal:
    return Pos(lit) if sign == POS else NafNot(lit)


class Solver:
    def __init__(self, program: Union[Program, DualProgram], opts: Optional[SolveOptions] = None):
        self.dp = program if isinstance(program, DualProgram) else dualize(program)
        self.opts = opts or SolveOptions()
        self.diagnostics: List[str] = []
        self.depth_exceeded = 0
        self.record = self.opts.record_justification

    # -- public ------------------------------------------------------------

    def solve(self, query) -> Iterator[Answer]:
        goals = tuple(parse_query(query) if isinstance(query, str) else query)
        return _deep_iter(lambda: self._answers(goals))

    # -- answers -----------------------------------------------------------

    def _enumeration_goals(self) -> Tuple[Decide, ...]:
        seen = []
        rules = list(self.dp.user_rules)
        if self.dp.program is not None:
            rules += self.dp.program.constraints()
        for lit in iter_rule_literals(rules):
            if lit.key != TRUE_KEY and literal_is_ground(lit) and lit not in seen:
                seen.append(lit)
        return tuple(Decide(lit) for lit in seen)

    def _answers(self, query: Tuple[Goal, ...]) -> Iterator[Answer]:
        goals: Sequence = query
        if all(isinstance(g, Pos) and g.literal.key == TRUE_KEY for g in query):
            goals = self._enumeration_goals()
        seen = set()
        count = 0
        for st, kids in self._goals(goals, (EMPTY, ()), None, 0):
            for st2, nkids in self._goals(self.dp.nmr_goal, st, None, 0):
                ans = self._answer(query, st2, kids, nkids)
                if ans is None:
                    continue
                k = ans.key()
                if k in seen:
                    continue
                seen.add(k)
                count += 1
                yield ans
                if self.opts.max_answers is not None and count >= self.opts.max_answers:
                    return

    def _answer(self, query, st: State, kids, nkids) -> Optional[Answer]:
        store, chs = st
        model: List[Goal] = []
        signs = {}
        for sign, lit in chs:
            rl = _resolve_lit(lit, store)
            if rl.key == TRUE_KEY:
                continue
            if literal_is_ground(rl):
                prev = signs.get(rl)
                if prev is not None and prev != sign:
                    return None
                if sign == POS and signs.get(rl.complement()) == POS:
                    return None
                signs[rl] = sign
            g = _signed(sign, rl)
            if rl.key in self.dp.hidden_keys or g in model:
                continue
            model.append(g)

        qvars: List[Var] = []
        for g in query:
            goal_vars(g, qvars)
        namer = VarNamer(keep=qvars)
        bindings = []
        for v in qvars:
            t = store.resolve(v)
            if t != v:
                bindings.append((v, t))
        residue = tuple(r for r in project(store, qvars) if r.kind != "binding")
        abduced = tuple(
            g.literal for g in model if isinstance(g, Pos) and g.literal.key in self.dp.abducible_keys
        )
        raw = tree = None
        if self.record:
            children = tuple(kids)
            if self.dp.nmr_goal:
                children += (ProofNode(NMR_LABEL, NMR_NODE, tuple(nkids)),)
            root = ProofNode(tuple(query), QUERY, children)
            # a lone goal without global constraints is its own root
            if len(query) == 1 and len(children) == 1 and not children[0].aux:
                root = children[0]
            raw = map_goals(root, lambda g: _resolve_goal(g, store))
            tree = splice_aux(raw)
        return Answer(
            model=tuple(model),
            bindings=tuple(bindings),
            residue=residue,
            justification=tree,
            abduced=abduced,
            query=tuple(query),
            store=store,
            chs=chs,
            namer=namer,
            raw_justification=raw,
        )

    # -- resolution --------------------------------------------------------

    def _node(self, goal, kind, children=(), rule=None, aux=False) -> Optional[ProofNode]:
        if not self.record:
            return None
        if rule is None:
            return ProofNode(goal, kind, tuple(children), aux=aux)
        return ProofNode(goal, kind, tuple(children), rule.id, rule.origin, aux)

    def _goals(self, goals: Sequence, st: State, path: Optional[Frame], depth: int, i: int = 0):
        if i == len(goals):
            yield st, ()
            return
        for st1, n1 in self._goal(goals[i], st, path, depth):
            if i + 1 == len(goals):
                yield st1, (n1,)
            else:
                for st2, ns in self._goals(goals, st1, path, depth, i + 1):
                    yield st2, (n1,) + ns

    def _goal(self, g, st: State, path: Optional[Frame], depth: int):
        if isinstance(g, Pos):
            lit = g.literal
            if lit.key == TRUE_KEY:
                yield st, self._node(g, BUILTIN)
            elif lit.key in self.dp.aux_keys:
                yield from self._aux(lit, st, path, depth)
            else:
                yield from self._call(POS, lit, st, path, depth)
        elif isinstance(g, NafNot):
            if g.literal.key == TRUE_KEY:
                return
            yield from self._call(NEG, g.literal, st, path, depth)
        elif isinstance(g, Rel):
            yield from self._rel(g, st)
        elif isinstance(g, Forall):
            yield from self._forall(g, st, path, depth)
        elif isinstance(g, Decide):
            yield from self._call(POS, g.literal, st, path, depth)
            yield from self._call(NEG, g.literal, st, path, depth)
        else:
            raise TypeError(f"not a goal: {g!r}")

    def _too_deep(self, depth: int, lit: Literal) -> bool:
        if depth <= self.opts.depth_limit:
            return False
        self.depth_exceeded += 1
        if len(self.diagnostics) < 20:
            self.diagnostics.append(f"depth limit {self.opts.depth_limit} exceeded at {Printer().literal(lit)}; branch pruned")
        return True

    def _aux(self, lit: Literal, st: State, path, depth: int):
        if self._too_deep(depth, lit):
            return
        store, chs = st
        for r in self.dp.aux_index.get(lit.key, ()):
            rr = rename_apart(r)
            s1 = unify_args(rr.head.args, lit.args, store)
            if s1 is None:
                continue
            for st2, kids in self._goals(rr.body, (s1, chs), path, depth + 1):
                yield st2, self._node(Pos(lit), RULE, kids, rr, aux=True)

    def _call(self, sign: str, lit: Literal, st: State, path: Optional[Frame], depth: int):
        if self._too_deep(depth, lit):
            return
        store, chs = st
        goal = _signed(sign, lit)
        rl = _resolve_lit(lit, store)
        key = rl.key
        ground = literal_is_ground(rl)

        # conflicts with proved hypotheses
        reuse = False
        if ground:
            comp_key = rl.complement().key
            for e_sign, e_lit in chs:
                ek = e_lit.key
                if ek != key and ek != comp_key:
                    continue
                el = _resolve_lit(e_lit, store)
                if ek == key:
                    if el == rl:
                        if e_sign != sign:
                            return
                        reuse = True
                    elif e_sign == NEG and sign == POS and not literal_is_ground(el):
                        if unify_args(el.args, rl.args, store) is not None:
                            return
                elif sign == POS and e_sign == POS and el.args == rl.args:
                    return

        # ancestors come before reuse, so an assumption cannot support itself positively
        cur = _switches(path, sign)
        f = path
        while f is not None:
            if f.literal.key == key and is_variant(_resolve_lit(f.literal, store), rl):
                if f.sign != sign:
                    return  # odd loop
                if cur == f.switches and sign == POS:
                    return  # positive loop, no well-founded support
                st2 = self._insert(st, sign, lit)
                if st2 is not None:
                    yield st2, self._node(goal, COINDUCTIVE)
                return
            f = f.parent

        if reuse:
            yield st, self._node(goal, CHS_REUSE)
            return

        frame = Frame(sign, lit, cur, path)
        if sign == POS:
            for r in self.dp.user_index.get(key, ()):
                rr = rename_apart(r)
                s1 = unify_args(rr.head.args, lit.args, store)
                if s1 is None:
                    continue
                for st2, kids in self._goals(rr.body, (s1, chs), frame, depth + 1):
                    st3 = self._insert(st2, sign, lit)
                    if st3 is not None:
                        yield st3, self._node(goal, RULE if rr.body else FACT, kids, rr)
        else:
            r = self.dp.combining_rule(key)
            if r is None:
                st3 = self._insert(st, sign, lit)
                if st3 is not None:
                    yield st3, self._node(goal, FACT)
                return
            rr = rename_apart(r)
            s1 = unify_args(rr.head.args, lit.args, store)
            if s1 is None:
                return
            for st2, kids in self._goals(rr.body, (s1, chs), frame, depth + 1):
                st3 = self._insert(st2, sign, lit)
                if st3 is not None:
                    kind = RULE if rr.body else FACT
                    yield st3, self._node(goal, kind, kids, rr)

    def _insert(self, st: State, sign: str, lit: Literal) -> Optional[State]:
        store, chs = st
        rl = _resolve_lit(lit, store)
        if literal_is_ground(rl):
            key = rl.key
            comp_key = rl.complement().key
            for e_sign, e_lit in chs:
                ek = e_lit.key
                if ek != key and ek != comp_key:
                    continue
                el = _resolve_lit(e_lit, store)
                if ek == key:
                    if el == rl:
                        return st if e_sign == sign else None
                    if e_sign == NEG and sign == POS and not literal_is_ground(el):
                        if unify_args(el.args, rl.args, store) is not None:
                            return None
                elif sign == POS and e_sign == POS and el.args == rl.args:
                    return None
        return store, chs + ((sign, lit),)

    def _rel(self, g: Rel, st: State):
        store, chs = st
        lhs, rhs = store.walk(g.lhs), store.walk(g.rhs)
        arith = is_arith(lhs) or is_arith(rhs)
        if g.op == EQ and not arith:
            s = unify(lhs, rhs, store)
            if s is not None:
                yield (s, chs), self._node(g, CONSTRAINT)
        elif g.op == NE and not arith:
            for s in add_diseq(lhs, rhs, store):
                yield (s, chs), self._node(g, CONSTRAINT)
        else:
            s = add_linear(g.op, lhs, rhs, store)
            if s is not None:
                yield (s, chs), self._node(g, CONSTRAINT)

    def _forall(self, g: Forall, st: State, path, depth: int):
        v = g.var
        vp = Var(v.name, fresh_id())
        body = subst_goal(g.body, {v: vp})
        outer = [w for w in goal_vars(g) if w != v]
        for (s1, c1), kids in self._goal(body, st, path, depth + 1):
            if s1.walk(vp) != vp:
                continue
            if any(_mentions(s1.resolve(w), vp) for w in outer):
                continue
            if vp in s1.linear_vars():
                raise ForallUnsupportedError(
                    f"universally quantified variable {v.name} is under arithmetic constraints"
                )
            values: List[Term] = []
            ok = True
            for l, r in diseqs_on(s1, vp):
                if l == vp and is_ground(r):
                    other = r
                elif r == vp and is_ground(l):
                    other = l
                else:
                    ok = False
                    break
                if other not in values:
                    values.append(other)
            if not ok:
                continue
            st2 = _forget(vp, (drop_var_constraints(s1, vp), c1))
            if not values:
                yield st2, self._node(g, FORALL, (kids,))
                continue
            for st3, more in self._instances(g, values, 0, st2, path, depth + 1):
                yield st3, self._node(g, FORALL, (kids,) + more)

    def _instances(self, g: Forall, values, i, st, path, depth):
        if i == len(values):
            yield st, ()
            return
        inst = subst_goal(g.body, {g.var: values[i]})
        for st1, n1 in self._goal(inst, st, path, depth):
            for st2, ns in self._instances(g, values, i + 1, st1, path, depth):
                yield st2, (n1,) + ns


def _mentions(t: Term, v: Var) -> bool:
    if isinstance(t, Var):
        return t == v
    if hasattr(t, "args"):
        return any(_mentions(a, v) for a in t.args)
    return False


def _forget(v: Var, st: State) -> State:
    """Drop hypotheses that still mention a universally quantified variable."""
    store, chs = st
    kept = tuple(e for e in chs if not any(_mentions(store.resolve(a), v) for a in e[1].args))
    return store, kept if len(kept) != len(chs) else chs


def _resolve_goal(g, store: ConstraintStore):
    if isinstance(g, Pos):
        return Pos(_resolve_lit(g.literal, store))
    if isinstance(g, NafNot):
        return NafNot(_resolve_lit(g.literal, store))
    if isinstance(g, Rel):
        return Rel(g.op, store.resolve(g.lhs), store.resolve(g.rhs))
    if isinstance(g, Forall):
        return Forall(g.var, _resolve_goal(g.body, store))
    return g


# -- deep recursion support ---------------------------------------------------

_STACK_BYTES = 512 * 1024 * 1024
_stack_lock = threading.Lock()
_REQ, _STOP = object(), object()


def _deep_iter(factory):
    """Run a generator in a worker thread with a large stack, handing items over lazily."""
    requests: "queue.Queue" = queue.Queue()
    results: "queue.Queue" = queue.Queue()

    def worker():
        gen = factory()
        try:
            while requests.get() is _REQ:
                try:
                    item = next(gen)
                except StopIteration:
                    results.put(("done", None))
                    return
                except BaseException as e:  # forwarded to the consumer
                    results.put(("error", e))
                    return
                results.put(("item", item))
        finally:
            gen.close()

    with _stack_lock:
        if sys.getrecursionlimit() < 1_000_000:
            sys.setrecursionlimit(1_000_000)
        old = threading.stack_size()
        threading.stack_size(_STACK_BYTES)
        try:
            t = threading.Thread(target=worker, name="gdasp-solver", daemon=True)
            t.start()
        finally:
            threading.stack_size(old)

    def consume():
        try:
            while True:
                requests.put(_REQ)
                tag, item = results.get()
                if tag == "done":
                    return
                if tag == "error":
                    raise item
                yield item
        finally:
            requests.put(_STOP)

    return consume()


# -- convenience --------------------------------------------------------------


def solve(program, query, opts: Optional[SolveOptions] = None) -> Iterator[Answer]:
    return Solver(program, opts).solve(query)


def count_models(program, query) -> int:
    return sum(1 for _ in Solver(program, SolveOptions(record_justification=False)).solve(query))


def depth_from_env(default: int = DEFAULT_DEPTH) -> int:
    raw = os.environ.get("GDASP_DEPTH")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        return default
    return value if value >= 1 else default
