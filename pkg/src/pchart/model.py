"""The chart document model: state tree, variables, transitions, queries.

Charts are immutable values; edits construct new charts. Geometry (boxes,
waypoints, pseudo-node positions, manual label rectangles) lives inline
with the semantic data so one document round-trips both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional, Union

from .errors import UnknownStateError
from .expr import (
    Assignment,
    BoolLit,
    Binary,
    Expr,
    KEYWORDS,
    TRUE,
    Trigger,
    TypeEnv,
    VarType,
    eval_expr,
    free_vars,
    typecheck,
)
from .errors import ExprTypeError, UnknownVariableError
from .geometry import Point, Rect

StateId = int
TransId = int

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

RESERVED_EVENTS = {"tick"}


def is_identifier(name: str) -> bool:
    return bool(_IDENT_RE.match(name)) and name not in KEYWORDS


@dataclass(frozen=True)
class VarDecl:
    name: str
    vtype: VarType
    init: Expr
    comment: Optional[str] = None


@dataclass(frozen=True)
class State:
    id: StateId
    name: str
    kind: str  # "basic" | "xor" | "and"
    children: tuple[StateId, ...] = ()
    initial: Optional[StateId] = None
    variables: tuple[VarDecl, ...] = ()
    invariant: Optional[Expr] = None
    cost_rate: Optional[Fraction] = None
    comment: Optional[str] = None
    box: Rect = Rect(0, 0, 100, 60)


@dataclass(frozen=True)
class Goto:
    target: StateId
    actions: tuple[Assignment, ...] = ()
    cost: Fraction = Fraction(0)
    waypoints: tuple[Point, ...] = ()


@dataclass(frozen=True)
class Prob:
    node: int
    pos: Point
    branches: tuple[tuple[Fraction, "TransitionTree"], ...]


@dataclass(frozen=True)
class Cond:
    node: int
    pos: Point
    branches: tuple[tuple[Expr, "TransitionTree"], ...]
    else_branch: Optional["TransitionTree"] = None


TransitionTree = Union[Goto, Prob, Cond]


@dataclass(frozen=True)
class Transition:
    id: TransId
    source: StateId
    trigger: Trigger
    guard: Optional[Expr] = None
    body: TransitionTree = None
    comment: Optional[str] = None


QUERY_KINDS = ("Pmin", "Pmax", "Emin", "Emax")


@dataclass(frozen=True)
class Query:
    id: int
    kind: str  # Pmin | Pmax | Emin | Emax
    target: StateId
    attached_to: StateId


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    object_id: Optional[int]
    message: str

    def __str__(self) -> str:
        where = f" (object {self.object_id})" if self.object_id is not None else ""
        return f"{self.severity}{where}: {self.message}"


def error(object_id: Optional[int], message: str) -> Diagnostic:
    return Diagnostic("error", object_id, message)


def warning(object_id: Optional[int], message: str) -> Diagnostic:
    return Diagnostic("warning", object_id, message)


@dataclass(frozen=True)
class Chart:
    name: str
    root: StateId
    states: dict[StateId, State]
    transitions: dict[TransId, Transition]
    queries: tuple[Query, ...] = ()
    next_id: int = 0
    label_overrides: dict[str, Rect] = field(default_factory=dict)

    def state(self, sid: StateId) -> State:
        try:
            return self.states[sid]
        except KeyError:
            raise UnknownStateError(sid) from None

    def transition(self, tid: TransId) -> Transition:
        try:
            return self.transitions[tid]
        except KeyError:
            raise UnknownStateError(tid) from None

    def state_by_name(self, name: str) -> Optional[State]:
        for sid in sorted(self.states):
            if self.states[sid].name == name:
                return self.states[sid]
        return None

    def with_replacements(self, **kw) -> "Chart":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# Hierarchy helpers


def parent_map(chart: Chart) -> dict[StateId, StateId]:
    """Child id -> parent id for every child reference that resolves."""
    parents: dict[StateId, StateId] = {}
    for sid, st in chart.states.items():
        for c in st.children:
            if c in chart.states:
                parents[c] = sid
    return parents


def path_from_root(chart: Chart, sid: StateId) -> list[StateId]:
    """Ids from the root down to sid, inclusive."""
    chart.state(sid)
    parents = parent_map(chart)
    path = [sid]
    seen = {sid}
    while path[-1] != chart.root:
        p = parents.get(path[-1])
        if p is None or p in seen:
            break
        path.append(p)
        seen.add(p)
    path.reverse()
    return path


def depth(chart: Chart, sid: StateId) -> int:
    return len(path_from_root(chart, sid)) - 1


def is_ancestor(chart: Chart, anc: StateId, sid: StateId) -> bool:
    """True when anc is a proper ancestor of sid."""
    path = path_from_root(chart, sid)
    return anc in path[:-1]


def dfs_order(chart: Chart) -> list[StateId]:
    """Document order: depth-first, children in sibling order."""
    order: list[StateId] = []
    seen: set[StateId] = set()

    def walk(sid: StateId):
        if sid in seen or sid not in chart.states:
            return
        seen.add(sid)
        order.append(sid)
        for c in chart.states[sid].children:
            walk(c)

    walk(chart.root)
    return order


def scope_decls(chart: Chart, sid: StateId) -> dict[str, tuple[StateId, VarDecl]]:
    """Variables visible at sid: own plus ancestors', outermost first.

    Inner declarations are recorded over outer ones; validate rejects that
    shadowing separately.
    """
    out: dict[str, tuple[StateId, VarDecl]] = {}
    for s in path_from_root(chart, sid):
        for decl in chart.states[s].variables:
            out[decl.name] = (s, decl)
    return out


def scope_env(chart: Chart, sid: StateId) -> TypeEnv:
    return {name: decl.vtype for name, (_, decl) in scope_decls(chart, sid).items()}


def all_var_decls(chart: Chart) -> list[tuple[StateId, VarDecl]]:
    """Every declaration in document order."""
    out = []
    for sid in dfs_order(chart):
        for decl in chart.states[sid].variables:
            out.append((sid, decl))
    return out


def tree_leaves(tree: TransitionTree) -> Iterator[Goto]:
    if isinstance(tree, Goto):
        yield tree
    elif isinstance(tree, Prob):
        for _, sub in tree.branches:
            yield from tree_leaves(sub)
    else:
        for _, sub in tree.branches:
            yield from tree_leaves(sub)
        if tree.else_branch is not None:
            yield from tree_leaves(tree.else_branch)


def tree_nodes(tree: TransitionTree) -> Iterator[TransitionTree]:
    yield tree
    if isinstance(tree, Prob):
        for _, sub in tree.branches:
            yield from tree_nodes(sub)
    elif isinstance(tree, Cond):
        for _, sub in tree.branches:
            yield from tree_nodes(sub)
        if tree.else_branch is not None:
            yield from tree_nodes(tree.else_branch)


def event_names(chart: Chart) -> list[str]:
    """User event names in document order of their transitions."""
    names: list[str] = []
    for tid in sorted(chart.transitions):
        tr = chart.transitions[tid]
        if tr.trigger.kind == "event" and tr.trigger.event not in names:
            names.append(tr.trigger.event)
    return names


# ---------------------------------------------------------------------------
# Structural validation


def validate(chart: Chart) -> list[Diagnostic]:
    """All structural, scoping, and typing diagnostics for a chart.

    Total: never raises on charts built from arbitrary schema-shaped input.
    """
    diags: list[Diagnostic] = []

    if not is_identifier(chart.name):
        diags.append(error(None, f"chart name {chart.name!r} is not an identifier"))

    if chart.root not in chart.states:
        diags.append(error(None, f"root state {chart.root} does not exist"))
        return diags

    # Tree shape: every state reachable from the root exactly once, no
    # dangling child references, no state owned by two parents.
    owners: dict[StateId, StateId] = {}
    for sid, st in chart.states.items():
        for c in st.children:
            if c not in chart.states:
                diags.append(error(sid, f"child {c} of state {st.name!r} does not exist"))
            elif c in owners:
                diags.append(error(c, "state has two parents"))
            elif c == chart.root:
                diags.append(error(sid, "root state cannot be a child"))
            else:
                owners[c] = sid

    reachable = set(dfs_order(chart))
    for sid in sorted(chart.states):
        if sid not in reachable:
            diags.append(error(sid, f"state {chart.states[sid].name!r} is not part of the tree"))

    ids_in_use = list(chart.states) + list(chart.transitions) + [q.id for q in chart.queries]
    for tr in chart.transitions.values():
        for node in tree_nodes(tr.body):
            if isinstance(node, (Prob, Cond)):
                ids_in_use.append(node.node)
    if ids_in_use and chart.next_id <= max(ids_in_use):
        diags.append(error(None, f"nextId {chart.next_id} does not exceed allocated id {max(ids_in_use)}"))

    tree_ok = not any(d.severity == "error" for d in diags)

    # Per-state checks.
    for sid in sorted(chart.states):
        st = chart.states[sid]
        if not is_identifier(st.name):
            diags.append(error(sid, f"state name {st.name!r} is not an identifier"))
        if st.kind not in ("basic", "xor", "and"):
            diags.append(error(sid, f"unknown state kind {st.kind!r}"))
            continue
        if st.kind == "basic":
            if st.children:
                diags.append(error(sid, "basic state cannot have children"))
            if st.initial is not None:
                diags.append(error(sid, "basic state cannot have an initial child"))
        elif st.kind == "xor":
            if not st.children:
                diags.append(error(sid, "xor state needs at least one child"))
            if st.initial is None:
                diags.append(error(sid, "xor state needs an initial child"))
            elif st.initial not in st.children:
                diags.append(error(sid, f"initial {st.initial} is not a child"))
        else:  # and
            if len(st.children) < 2:
                diags.append(error(sid, "and state needs at least two children"))
            if st.initial is not None:
                diags.append(error(sid, "and state cannot have an initial child"))
            for c in st.children:
                if c in chart.states and chart.states[c].kind == "and":
                    diags.append(error(c, "children of an and state must be xor or basic"))

        names = [chart.states[c].name for c in st.children if c in chart.states]
        for n in sorted(set(n for n in names if names.count(n) > 1)):
            diags.append(error(sid, f"sibling states share the name {n!r}"))

        for c in st.children:
            if c not in chart.states:
                continue
            cb = chart.states[c].box
            if not st.box.contains_rect(cb):
                diags.append(error(c, f"box of {chart.states[c].name!r} leaves its parent box"))
        kids = [c for c in st.children if c in chart.states]
        for i in range(len(kids)):
            for j in range(i + 1, len(kids)):
                if chart.states[kids[i]].box.overlaps(chart.states[kids[j]].box):
                    diags.append(error(kids[j], f"boxes of {chart.states[kids[i]].name!r} and "
                                                f"{chart.states[kids[j]].name!r} overlap"))

        if st.cost_rate is not None and st.cost_rate < 0:
            diags.append(error(sid, "cost rate must be nonnegative"))

    if not tree_ok:
        return diags

    # Variables: identifiers, constant init of matching type within range,
    # and no shadowing along the ancestor chain.
    for sid in dfs_order(chart):
        st = chart.states[sid]
        seen_here: set[str] = set()
        outer = scope_decls(chart, sid) if sid != chart.root else {}
        outer_names = set()
        for anc in path_from_root(chart, sid)[:-1]:
            outer_names.update(d.name for d in chart.states[anc].variables)
        for decl in st.variables:
            if not is_identifier(decl.name):
                diags.append(error(sid, f"variable name {decl.name!r} is not an identifier"))
                continue
            if decl.name in seen_here:
                diags.append(error(sid, f"variable {decl.name!r} declared twice in {st.name!r}"))
            seen_here.add(decl.name)
            if decl.name in outer_names:
                diags.append(error(sid, f"variable {decl.name!r} shadows an ancestor declaration"))
            if free_vars(decl.init):
                diags.append(error(sid, f"initial value of {decl.name!r} must be constant"))
                continue
            try:
                t = typecheck(decl.init, {})
            except (ExprTypeError, UnknownVariableError) as e:
                diags.append(error(sid, f"initial value of {decl.name!r}: {e}"))
                continue
            if t != ("bool" if decl.vtype.base == "bool" else "int"):
                diags.append(error(sid, f"initial value of {decl.name!r} has type {t}, expected {decl.vtype}"))
                continue
            if decl.vtype.base == "int":
                v = eval_expr(decl.init, {})
                if not (decl.vtype.lo <= v <= decl.vtype.hi):
                    diags.append(error(sid, f"initial value {v} of {decl.name!r} outside {decl.vtype}"))

    # Invariants typecheck against the accumulated scope.
    for sid in dfs_order(chart):
        st = chart.states[sid]
        if st.invariant is None:
            continue
        try:
            t = typecheck(st.invariant, scope_env(chart, sid))
            if t != "bool":
                diags.append(error(sid, f"invariant of {st.name!r} has type {t}, expected bool"))
        except (ExprTypeError, UnknownVariableError) as e:
            diags.append(error(sid, f"invariant of {st.name!r}: {e}"))

    # Transitions.
    pseudo_ids: set[int] = set()
    for tid in sorted(chart.transitions):
        tr = chart.transitions[tid]
        if tr.id != tid:
            diags.append(error(tid, "transition id mismatch"))
        if tr.source not in chart.states:
            diags.append(error(tid, f"transition source {tr.source} does not exist"))
            continue
        env = scope_env(chart, tr.source)

        trig = tr.trigger
        if trig.kind == "event":
            if not is_identifier(trig.event):
                diags.append(error(tid, f"event name {trig.event!r} is not an identifier"))
            elif trig.event in RESERVED_EVENTS:
                diags.append(error(tid, f"event name {trig.event!r} is reserved"))
        elif trig.kind in ("after", "after_nondet", "after_uniform"):
            if not (0 < trig.lo <= trig.hi):
                diags.append(error(tid, f"timed trigger needs 0 < lo <= hi, got [{trig.lo},{trig.hi}]"))
        elif trig.kind == "after_exp":
            diags.append(warning(tid, "exponential delay is accepted but cannot be compiled"))
            if trig.rate is None or trig.rate <= 0:
                diags.append(error(tid, "exponential delay needs a positive rate"))
        else:
            diags.append(error(tid, f"unknown trigger kind {trig.kind!r}"))

        if tr.guard is not None:
            try:
                if typecheck(tr.guard, env) != "bool":
                    diags.append(error(tid, "guard must be boolean"))
            except (ExprTypeError, UnknownVariableError) as e:
                diags.append(error(tid, f"guard: {e}"))

        def check_actions(actions: tuple[Assignment, ...]):
            targets = [a.name for a in actions]
            for n in sorted(set(t for t in targets if targets.count(t) > 1)):
                diags.append(error(tid, f"parallel assignment writes {n!r} twice"))
            for a in actions:
                if a.name not in env:
                    diags.append(error(tid, f"assignment to unknown variable {a.name!r}"))
                    continue
                want = "bool" if env[a.name].base == "bool" else "int"
                try:
                    got = typecheck(a.expr, env)
                    if got != want:
                        diags.append(error(tid, f"assignment to {a.name!r} has type {got}, expected {want}"))
                except (ExprTypeError, UnknownVariableError) as e:
                    diags.append(error(tid, f"assignment to {a.name!r}: {e}"))

        def check_tree(node: TransitionTree):
            if isinstance(node, Goto):
                if node.target not in chart.states:
                    diags.append(error(tid, f"transition target {node.target} does not exist"))
                if node.cost < 0:
                    diags.append(error(tid, "transition cost must be nonnegative"))
                check_actions(node.actions)
                return
            if node.node in pseudo_ids:
                diags.append(error(tid, f"pseudo-node id {node.node} used twice"))
            pseudo_ids.add(node.node)
            if isinstance(node, Prob):
                total = Fraction(0)
                for p, sub in node.branches:
                    if not (0 < p <= 1):
                        diags.append(error(tid, f"branch probability {p} outside (0,1]"))
                    total += p
                    check_tree(sub)
                if total != 1:
                    diags.append(error(tid, f"probabilities sum to {total} != 1"))
            else:
                for g, sub in node.branches:
                    try:
                        if typecheck(g, env) != "bool":
                            diags.append(error(tid, "condition branch guard must be boolean"))
                    except (ExprTypeError, UnknownVariableError) as e:
                        diags.append(error(tid, f"condition branch guard: {e}"))
                    check_tree(sub)
                if node.else_branch is not None:
                    check_tree(node.else_branch)

        if tr.body is None:
            diags.append(error(tid, "transition has no body"))
        else:
            check_tree(tr.body)

    # Queries.
    for q in chart.queries:
        if q.kind not in QUERY_KINDS:
            diags.append(error(q.id, f"unknown query kind {q.kind!r}"))
        if q.target not in chart.states:
            diags.append(error(q.id, f"query target {q.target} does not exist"))
        if q.attached_to not in chart.states:
            diags.append(error(q.id, f"query attached to unknown state {q.attached_to}"))

    return diags


def accumulated_invariant(chart: Chart, sid: StateId) -> Expr:
    """Conjunction of the invariants of sid and all its ancestors.

    Outer invariants come first; states without an invariant contribute
    nothing. With no invariants anywhere the result is `true`.
    """
    chart.state(sid)
    exprs = [
        chart.states[s].invariant
        for s in path_from_root(chart, sid)
        if chart.states[s].invariant is not None
    ]
    if not exprs:
        return TRUE
    acc = exprs[0]
    for e in exprs[1:]:
        acc = Binary("and", acc, e)
    return acc
