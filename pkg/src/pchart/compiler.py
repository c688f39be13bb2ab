"""Translation of charts into probabilistic guarded commands with priority.

Flattening: every xor state owns a region variable `r_<name>` ranging over
its children in sibling order; basic children of and states need no
variable (they are active whenever their parent is). Data variables keep
their declared names unless two declarations collide, in which case the
state id disambiguates. Timed states get a clock `c_<name>` and, for a
uniformly distributed delay, a deadline `d_<name>` drawn on entry.

Inactive regions are canonicalized: exiting a subtree resets its region
variables to their initial index, its clocks to 0, and its deadlines to
their lower bound. Re-entry always sets them again, and canonical values
keep the reachable flat space free of stale-configuration duplicates.

Priorities: a command's priority is the depth of its transition's source
state, deeper states winning. The direction is a project decision kept in
this one field. Clock-advance commands share the priority of their state,
so firing within a nondeterministic window and waiting compete as equals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import CompileError, RangeViolation, UnsupportedTrigger
from .expr import (
    Binary,
    BoolLit,
    Expr,
    IntLit,
    TRUE,
    Unary,
    Value,
    Valuation,
    Var,
    eval_expr,
    format_rational,
    pretty,
)
from .model import (
    Chart,
    Cond,
    Goto,
    Prob,
    State,
    StateId,
    TransId,
    TransitionTree,
    all_var_decls,
    depth,
    dfs_order,
    event_names,
    parent_map,
    path_from_root,
    scope_decls,
    validate,
)


def _conj(parts: Sequence[Expr]) -> Expr:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    acc = parts[0]
    for p in parts[1:]:
        acc = Binary("and", acc, p)
    return acc


def _eq(name: str, value: int) -> Expr:
    return Binary("=", Var(name), IntLit(value))


def subst_vars(e: Expr, mapping: dict[str, str]) -> Expr:
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name))
    if isinstance(e, Unary):
        return Unary(e.op, subst_vars(e.arg, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, subst_vars(e.lhs, mapping), subst_vars(e.rhs, mapping))
    return e


# ---------------------------------------------------------------------------
# Region encoding


@dataclass(frozen=True)
class VarSpec:
    """One runtime variable of the flattened program."""

    name: str
    kind: str  # "region" | "data" | "clock" | "deadline"
    is_bool: bool
    lo: int
    hi: int
    init: Value
    owner: StateId
    comment: Optional[str] = None


@dataclass(frozen=True)
class TimerDecl:
    state_id: StateId
    clock_var: str
    bound: int
    deadline_var: Optional[str] = None
    lo: Optional[int] = None
    hi: Optional[int] = None


@dataclass(frozen=True)
class RegionMap:
    region_vars: dict[StateId, str]  # xor state -> region variable
    child_index: dict[StateId, int]  # child state -> index within its parent
    data_names: dict[tuple[StateId, str], str]  # (owner, declared) -> runtime
    variables: tuple[VarSpec, ...]  # full declaration order
    initial: dict[str, Value]

    def spec(self, name: str) -> VarSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


def _timed_states(chart: Chart) -> dict[StateId, dict]:
    """Per timed state: clock bound and the optional uniform window."""
    timed: dict[StateId, dict] = {}
    for tid in sorted(chart.transitions):
        tr = chart.transitions[tid]
        kind = tr.trigger.kind
        if kind not in ("after", "after_nondet", "after_uniform"):
            continue
        info = timed.setdefault(tr.source, {"bound": 0, "uniform": None})
        info["bound"] = max(info["bound"], tr.trigger.hi)
        if kind == "after_uniform":
            if info["uniform"] is not None:
                raise CompileError(
                    f"state {chart.states[tr.source].name!r} has two uniform delays; "
                    "one deadline per state is supported"
                )
            info["uniform"] = (tr.trigger.lo, tr.trigger.hi)
    return timed


def initial_states(chart: Chart) -> set[StateId]:
    """The default completion from the root."""
    active: set[StateId] = set()

    def enter(sid: StateId):
        active.add(sid)
        st = chart.states[sid]
        if st.kind == "xor":
            enter(st.initial)
        elif st.kind == "and":
            for c in st.children:
                enter(c)

    enter(chart.root)
    return active


def encode_regions(chart: Chart) -> RegionMap:
    """Deterministic flattening of the state tree onto bounded variables."""
    problems = [d for d in validate(chart) if d.severity == "error"]
    if problems:
        raise CompileError(f"chart is invalid: {problems[0]}")

    order = dfs_order(chart)
    xors = [sid for sid in order if chart.states[sid].kind == "xor"]
    region_names = _disambiguate([(sid, "r_" + chart.states[sid].name) for sid in xors], chart)

    child_index: dict[StateId, int] = {}
    for sid in order:
        st = chart.states[sid]
        if st.kind == "xor":
            for i, c in enumerate(st.children):
                child_index[c] = i

    decls = all_var_decls(chart)
    counts: dict[str, int] = {}
    for _, d in decls:
        counts[d.name] = counts.get(d.name, 0) + 1
    data_names = {
        (sid, d.name): d.name if counts[d.name] == 1 else f"{d.name}_{sid}"
        for sid, d in decls
    }

    timed = _timed_states(chart)
    timed_order = [sid for sid in order if sid in timed]
    clock_names = _disambiguate([(sid, "c_" + chart.states[sid].name) for sid in timed_order], chart)
    deadline_names = _disambiguate(
        [(sid, "d_" + chart.states[sid].name) for sid in timed_order if timed[sid]["uniform"]],
        chart,
    )

    active0 = initial_states(chart)
    variables: list[VarSpec] = []
    initial: dict[str, Value] = {}

    for sid in xors:
        st = chart.states[sid]
        init_idx = child_index[st.initial]
        enc = " ".join(f"{chart.states[c].name}={i}" for i, c in enumerate(st.children))
        variables.append(
            VarSpec(region_names[sid], "region", False, 0, len(st.children) - 1,
                    init_idx, sid, f"{st.name}: {enc}")
        )
        initial[region_names[sid]] = init_idx

    for sid, d in decls:
        name = data_names[(sid, d.name)]
        if d.vtype.base == "bool":
            init = bool(eval_expr(d.init, {}))
            variables.append(VarSpec(name, "data", True, 0, 1, init, sid, d.comment))
        else:
            init = int(eval_expr(d.init, {}))
            variables.append(VarSpec(name, "data", False, d.vtype.lo, d.vtype.hi, init, sid, d.comment))
        initial[name] = variables[-1].init

    for sid in timed_order:
        info = timed[sid]
        variables.append(
            VarSpec(clock_names[sid], "clock", False, 0, info["bound"], 0, sid,
                    f"clock of {chart.states[sid].name}")
        )
        initial[clock_names[sid]] = 0
        if info["uniform"]:
            lo, hi = info["uniform"]
            if sid in active0:
                raise CompileError(
                    f"state {chart.states[sid].name!r} has a uniform delay but is active "
                    "initially; the deadline has no entry point to be drawn at"
                )
            variables.append(
                VarSpec(deadline_names[sid], "deadline", False, lo, hi, lo, sid,
                        f"deadline of {chart.states[sid].name}")
            )
            initial[deadline_names[sid]] = lo

    names = [v.name for v in variables]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise CompileError(f"generated variable names collide: {', '.join(dupes)}")

    return RegionMap(
        region_vars=region_names,
        child_index=child_index,
        data_names=data_names,
        variables=tuple(variables),
        initial=initial,
    )


def _disambiguate(pairs: list[tuple[StateId, str]], chart: Chart) -> dict[StateId, str]:
    counts: dict[str, int] = {}
    for _, n in pairs:
        counts[n] = counts.get(n, 0) + 1
    return {sid: (n if counts[n] == 1 else f"{n}_{sid}") for sid, n in pairs}


# ---------------------------------------------------------------------------
# Guarded commands


@dataclass(frozen=True)
class Outcome:
    prob: Fraction
    updates: tuple[tuple[str, Expr], ...]
    cost: Fraction = Fraction(0)


@dataclass(frozen=True)
class GuardedCommand:
    id: int
    event: str
    priority: int
    guard: Expr
    outcomes: tuple[Outcome, ...]
    source_trans: Optional[TransId]
    comment: Optional[str] = None
    advance: bool = False  # clock-advance command on tick


@dataclass(frozen=True)
class GCProgram:
    name: str
    region_map: RegionMap
    commands: tuple[GuardedCommand, ...]
    timers: tuple[TimerDecl, ...]
    events: tuple[str, ...]  # user events then "tick"
    state_cost_rates: dict[StateId, Fraction]
    activity: dict[StateId, Expr]  # chart state -> activity predicate

    def commands_for(self, event: str) -> tuple[GuardedCommand, ...]:
        return tuple(c for c in self.commands if c.event == event)

    @property
    def variables(self) -> tuple[VarSpec, ...]:
        return self.region_map.variables


def activity_conjuncts(chart: Chart, rm: RegionMap, sid: StateId) -> list[Expr]:
    """Region equations pinning sid active; empty for the root."""
    out: list[Expr] = []
    path = path_from_root(chart, sid)
    for parent, child in zip(path, path[1:]):
        if chart.states[parent].kind == "xor":
            out.append(_eq(rm.region_vars[parent], rm.child_index[child]))
    return out


def active_states(chart: Chart, rm: RegionMap, v: Valuation) -> set[StateId]:
    """Chart states active under a valuation of the region variables."""
    active: set[StateId] = set()

    def walk(sid: StateId):
        active.add(sid)
        st = chart.states[sid]
        if st.kind == "xor":
            idx = v[rm.region_vars[sid]]
            walk(st.children[idx])
        elif st.kind == "and":
            for c in st.children:
                walk(c)

    walk(chart.root)
    return active


def _effective_lca(chart: Chart, source: StateId, target: StateId) -> Optional[StateId]:
    """Least common proper ancestor; lifted above and states so that a
    transition crossing concurrent regions exits the whole and state.
    Returns None when everything below the root is exited."""
    ps = path_from_root(chart, source)
    pt = path_from_root(chart, target)
    common = 0
    for a, b in zip(ps[:-1], pt[:-1]):
        if a == b:
            common += 1
        else:
            break
    if common == 0:
        return None
    lca = ps[common - 1]
    while chart.states[lca].kind == "and":
        idx = ps.index(lca)
        if idx == 0:
            return None
        lca = ps[idx - 1]
    return lca


class _Compiler:
    def __init__(self, chart: Chart):
        self.chart = chart
        self.rm = encode_regions(chart)
        self.timed = _timed_states(chart)
        self.timers: dict[StateId, TimerDecl] = {}
        order = dfs_order(chart)
        for sid in order:
            if sid in self.timed:
                info = self.timed[sid]
                clock = next(v.name for v in self.rm.variables if v.kind == "clock" and v.owner == sid)
                dvar = None
                lo = hi = None
                if info["uniform"]:
                    dvar = next(v.name for v in self.rm.variables if v.kind == "deadline" and v.owner == sid)
                    lo, hi = info["uniform"]
                self.timers[sid] = TimerDecl(sid, clock, info["bound"], dvar, lo, hi)
        self.dfs_index = {sid: i for i, sid in enumerate(order)}

    def rename_for(self, sid: StateId) -> dict[str, str]:
        return {
            name: self.rm.data_names[(owner, name)]
            for name, (owner, _) in scope_decls(self.chart, sid).items()
        }

    # -- structural updates --------------------------------------------------

    def _default_completion(self, sid: StateId, updates: dict[str, Expr], entered: set[StateId]):
        entered.add(sid)
        st = self.chart.states[sid]
        if st.kind == "xor":
            updates[self.rm.region_vars[sid]] = IntLit(self.rm.child_index[st.initial])
            self._default_completion(st.initial, updates, entered)
        elif st.kind == "and":
            for c in st.children:
                self._default_completion(c, updates, entered)

    def _reset_subtree(self, top: StateId, updates: dict[str, Expr]):
        """Canonical values for an exited subtree."""
        st = self.chart.states[top]
        if st.kind == "xor":
            updates[self.rm.region_vars[top]] = IntLit(self.rm.child_index[st.initial])
        if top in self.timers:
            t = self.timers[top]
            updates[t.clock_var] = IntLit(0)
            if t.deadline_var:
                updates[t.deadline_var] = IntLit(t.lo)
        for c in st.children:
            self._reset_subtree(c, updates)

    def goto_updates(self, source: StateId, target: StateId) -> tuple[dict[str, Expr], set[StateId]]:
        """Region/timer updates for one goto leaf, and the entered set."""
        chart = self.chart
        lca = _effective_lca(chart, source, target)
        updates: dict[str, Expr] = {}
        ps = path_from_root(chart, source)
        if lca is None:
            exit_top = ps[1] if len(ps) > 1 else ps[0]
            # exiting everything below the root (or the root's subtree for
            # a root-level and crossing): reset all the root's children
            for c in chart.states[chart.root].children:
                self._reset_subtree(c, updates)
            entry_path = path_from_root(chart, target)
        else:
            idx = ps.index(lca)
            if idx + 1 < len(ps):
                self._reset_subtree(ps[idx + 1], updates)
            pt = path_from_root(chart, target)
            entry_path = pt[pt.index(lca) + 1:]
            entry_path = [lca] + entry_path

        entered: set[StateId] = set()
        # walk the entry path; complete sideways regions of and states
        for i, sid in enumerate(entry_path):
            st = chart.states[sid]
            is_lca_anchor = (lca is not None and i == 0)
            if not is_lca_anchor:
                entered.add(sid)
            nxt = entry_path[i + 1] if i + 1 < len(entry_path) else None
            if nxt is not None:
                if st.kind == "xor":
                    updates[self.rm.region_vars[sid]] = IntLit(self.rm.child_index[nxt])
                elif st.kind == "and":
                    for c in st.children:
                        if c != nxt:
                            self._default_completion(c, updates, entered)
            elif not is_lca_anchor:
                self._default_completion(sid, updates, entered)

        for sid in entered:
            if sid in self.timers:
                updates[self.timers[sid].clock_var] = IntLit(0)
        return updates, entered

    # -- tree flattening -----------------------------------------------------

    def _profiles(self, tree: TransitionTree) -> list[tuple[list[Expr], TransitionTree]]:
        """Split conditional nodes into (guard conjuncts, prob-only tree)
        alternatives; a cond with no matching branch and no else simply
        yields nothing for that profile."""
        if isinstance(tree, Goto):
            return [([], tree)]
        if isinstance(tree, Prob):
            combos: list[tuple[list[Expr], list[tuple[Fraction, TransitionTree]]]] = [([], [])]
            for p, sub in tree.branches:
                new_combos = []
                for guards, branches in combos:
                    for sub_guards, sub_tree in self._profiles(sub):
                        new_combos.append((guards + sub_guards, branches + [(p, sub_tree)]))
                combos = new_combos
            return [(g, Prob(tree.node, tree.pos, tuple(bs))) for g, bs in combos]
        assert isinstance(tree, Cond)
        out: list[tuple[list[Expr], TransitionTree]] = []
        negated: list[Expr] = []
        for g, sub in tree.branches:
            for sub_guards, sub_tree in self._profiles(sub):
                out.append((negated + [g] + sub_guards, sub_tree))
            negated = negated + [Unary("not", g)]
        if tree.else_branch is not None:
            for sub_guards, sub_tree in self._profiles(tree.else_branch):
                out.append((negated + sub_guards, sub_tree))
        return out

    def _distribute(self, tree: TransitionTree) -> list[tuple[Fraction, Goto]]:
        if isinstance(tree, Goto):
            return [(Fraction(1), tree)]
        assert isinstance(tree, Prob)
        out = []
        for p, sub in tree.branches:
            for q, leaf in self._distribute(sub):
                out.append((p * q, leaf))
        return out

    def leaf_outcomes(self, source: StateId, prob: Fraction, leaf: Goto) -> list[Outcome]:
        rename = self.rename_for(source)
        updates, entered = self.goto_updates(source, leaf.target)
        for a in leaf.actions:
            updates[rename[a.name]] = subst_vars(a.expr, rename)
        ordered_names = [v.name for v in self.rm.variables if v.name in updates]
        base = [(n, updates[n]) for n in ordered_names]

        # uniformly distributed deadlines of entered states multiply the outcome
        draws: list[tuple[str, int, int]] = []
        for sid in sorted(entered, key=lambda s: self.dfs_index[s]):
            t = self.timers.get(sid)
            if t and t.deadline_var:
                draws.append((t.deadline_var, t.lo, t.hi))
        outcomes = [Outcome(prob, tuple(base), leaf.cost)]
        for dvar, lo, hi in draws:
            n = hi - lo + 1
            expanded = []
            for o in outcomes:
                for val in range(lo, hi + 1):
                    ups = tuple(
                        (name, IntLit(val)) if name == dvar else (name, e)
                        for name, e in o.updates
                    )
                    if dvar not in [name for name, _ in o.updates]:
                        ups = o.updates + ((dvar, IntLit(val)),)
                    expanded.append(Outcome(o.prob / n, ups, o.cost))
            outcomes = expanded
        return outcomes

    # -- command generation ----------------------------------------------------

    def compile(self) -> GCProgram:
        chart = self.chart
        raw: list[tuple[tuple, GuardedCommand]] = []

        for tid in sorted(chart.transitions):
            tr = chart.transitions[tid]
            trig = tr.trigger
            if trig.kind == "after_exp":
                raise UnsupportedTrigger("exponential", tid)
            rename = self.rename_for(tr.source)
            act = activity_conjuncts(chart, self.rm, tr.source)
            guard_parts = list(act)
            if trig.kind == "event":
                event = trig.event
            else:
                event = "tick"
                t = self.timers[tr.source]
                if trig.kind == "after":
                    guard_parts.append(_eq(t.clock_var, trig.lo))
                elif trig.kind == "after_nondet":
                    guard_parts.append(
                        Binary("and",
                               Binary("<=", IntLit(trig.lo), Var(t.clock_var)),
                               Binary("<=", Var(t.clock_var), IntLit(trig.hi)))
                    )
                else:  # after_uniform
                    guard_parts.append(Binary("=", Var(t.clock_var), Var(t.deadline_var)))
            if tr.guard is not None:
                guard_parts.append(subst_vars(tr.guard, rename))

            prio = depth(chart, tr.source)
            for pidx, (extra, ptree) in enumerate(self._profiles(tr.body)):
                outcomes: list[Outcome] = []
                for p, leaf in self._distribute(ptree):
                    outcomes.extend(self.leaf_outcomes(tr.source, p, leaf))
                guard = _conj(guard_parts + [subst_vars(g, rename) for g in extra])
                key = (-prio, self.dfs_index[tr.source], 0, tid, pidx)
                raw.append((key, GuardedCommand(
                    id=-1, event=event, priority=prio, guard=guard,
                    outcomes=tuple(outcomes), source_trans=tid, comment=tr.comment,
                )))

        # clock advance commands, one per timed state
        for sid, t in self.timers.items():
            st = chart.states[sid]
            parts = activity_conjuncts(chart, self.rm, sid)
            parts.append(Binary("<", Var(t.clock_var), IntLit(t.bound)))
            rename = self.rename_for(sid)
            urgent: list[Expr] = []
            for tid in sorted(chart.transitions):
                tr = chart.transitions[tid]
                if tr.source != sid:
                    continue
                kind = tr.trigger.kind
                if kind not in ("after", "after_nondet", "after_uniform"):
                    continue
                if kind == "after":
                    if tr.trigger.lo >= t.bound:
                        continue  # c < bound already blocks waiting there
                    at = _eq(t.clock_var, tr.trigger.lo)
                elif kind == "after_nondet":
                    if tr.trigger.hi >= t.bound:
                        continue
                    at = _eq(t.clock_var, tr.trigger.hi)
                else:
                    at = Binary("=", Var(t.clock_var), Var(t.deadline_var))
                g = at if tr.guard is None else Binary("and", at, subst_vars(tr.guard, rename))
                urgent.append(g)
            for u in urgent:
                parts.append(Unary("not", u))
            prio = depth(chart, sid)
            key = (-prio, self.dfs_index[sid], 1, 0, 0)
            raw.append((key, GuardedCommand(
                id=-1, event="tick", priority=prio, guard=_conj(parts),
                outcomes=(Outcome(Fraction(1), ((t.clock_var, Binary("+", Var(t.clock_var), IntLit(1))),)),),
                source_trans=None, comment=None, advance=True,
            )))

        raw.sort(key=lambda kv: kv[0])
        commands = tuple(
            GuardedCommand(
                id=i, event=c.event, priority=c.priority, guard=c.guard,
                outcomes=c.outcomes, source_trans=c.source_trans,
                comment=c.comment, advance=c.advance,
            )
            for i, (_, c) in enumerate(raw)
        )

        rates = {
            sid: chart.states[sid].cost_rate
            for sid in dfs_order(chart)
            if chart.states[sid].cost_rate is not None
        }
        activity = {
            sid: _conj(activity_conjuncts(chart, self.rm, sid)) for sid in dfs_order(chart)
        }
        return GCProgram(
            name=chart.name,
            region_map=self.rm,
            commands=commands,
            timers=tuple(self.timers[sid] for sid in sorted(self.timers, key=lambda s: self.dfs_index[s])),
            events=tuple(event_names(chart)) + ("tick",),
            state_cost_rates=rates,
            activity=activity,
        )


def compile_chart(chart: Chart) -> GCProgram:
    """Flatten a valid chart into its guarded-command program."""
    return _Compiler(chart).compile()


# ---------------------------------------------------------------------------
# Reference interpreter


class DeterministicResolver:
    """First command in program order, first outcome."""

    def choose_command(self, commands: Sequence[GuardedCommand]) -> GuardedCommand:
        return commands[0]

    def choose_outcome(self, outcomes: Sequence[Outcome]) -> int:
        return 0


class RandomResolver:
    """Seeded random tie-breaking and outcome sampling; reproducible."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def choose_command(self, commands: Sequence[GuardedCommand]) -> GuardedCommand:
        return commands[self.rng.randrange(len(commands))]

    def choose_outcome(self, outcomes: Sequence[Outcome]) -> int:
        u = self.rng.random()
        acc = 0.0
        for i, o in enumerate(outcomes):
            acc += float(o.prob)
            if u < acc:
                return i
        return len(outcomes) - 1


def rates_for(p: GCProgram, v: Valuation) -> Fraction:
    """Sum of the cost rates of the chart states active under v."""
    return sum(
        (r for sid, r in p.state_cost_rates.items() if eval_expr(p.activity[sid], v)),
        Fraction(0),
    )


def enabled_commands(p: GCProgram, v: Valuation, event: str) -> list[GuardedCommand]:
    return [c for c in p.commands if c.event == event and eval_expr(c.guard, v)]


def fireable_commands(p: GCProgram, v: Valuation, event: str) -> list[GuardedCommand]:
    """The enabled commands that can actually fire: the top priority level."""
    enabled = enabled_commands(p, v, event)
    if not enabled:
        return []
    top = max(c.priority for c in enabled)
    return [c for c in enabled if c.priority == top]


def apply_outcome(p: GCProgram, v: Valuation, outcome: Outcome,
                  trans_id: Optional[TransId]) -> dict[str, Value]:
    """Parallel assignment with declared-range checking."""
    out = dict(v)
    for name, e in outcome.updates:
        val = eval_expr(e, v)
        spec = p.region_map.spec(name)
        if spec.is_bool:
            out[name] = bool(val)
        else:
            if not (spec.lo <= val <= spec.hi):
                raise RangeViolation(name, val, trans_id)
            out[name] = int(val)
    return out


def interpret_step(
    p: GCProgram,
    v: Valuation,
    event: str,
    resolver=None,
) -> tuple[dict[str, Value], Fraction, Optional[int]]:
    """One reference-semantics step: fire the highest-priority enabled
    command for the event (ties and probabilistic outcomes go to the
    resolver), or do nothing. Tick steps that fire accrue the cost rates
    of the active states.
    """
    resolver = resolver or DeterministicResolver()
    cands = fireable_commands(p, v, event)
    if not cands:
        return dict(v), Fraction(0), None
    cmd = cands[0] if len(cands) == 1 else resolver.choose_command(cands)
    outcome = cmd.outcomes[0] if len(cmd.outcomes) == 1 else cmd.outcomes[resolver.choose_outcome(cmd.outcomes)]
    v2 = apply_outcome(p, v, outcome, cmd.source_trans)
    cost = outcome.cost
    if event == "tick" and p.state_cost_rates:
        cost += rates_for(p, v)
    return v2, cost, cmd.id


# ---------------------------------------------------------------------------
# Pretty printing


def _format_updates(outcome: Outcome) -> str:
    if not outcome.updates:
        body = "skip"
    else:
        body = ", ".join(f"{n} := {pretty(e)}" for n, e in outcome.updates)
    text = f"({body})"
    if outcome.cost != 0:
        text += f" $ {format_rational(outcome.cost)}"
    return text


def pretty_print(p: GCProgram) -> str:
    """Human-readable program listing, one command per line."""
    lines = [f"program {p.name}"]
    for v in p.variables:
        dom = "bool" if v.is_bool else f"{v.lo}..{v.hi}"
        init = ("true" if v.init else "false") if v.is_bool else str(v.init)
        decl = f"var {v.name}: {dom} init {init}"
        if v.comment:
            decl += f"  // {v.comment}"
        lines.append(decl)
    lines.append("")
    for c in p.commands:
        if c.comment:
            lines.append(f"// {c.comment}")
        guard = pretty(c.guard)
        if len(c.outcomes) == 1:
            rhs = _format_updates(c.outcomes[0])
        else:
            rhs = " + ".join(
                f"{format_rational(o.prob)}: {_format_updates(o)}" for o in c.outcomes
            )
        lines.append(f"[{c.event}, prio {c.priority}] {guard} -> {rhs}")
    return "\n".join(lines) + "\n"
