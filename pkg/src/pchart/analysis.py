"""Desk-scale analysis of compiled programs.

enumerate_states explores the reachable valuations breadth-first under
every event and every resolution of nondeterminism and probability; the
resulting flat space is an MDP whose choices are the fireable (maximal
priority) commands. Reachability and expected cost run value iteration
over a CSR view of that MDP; minimal reachability first pins the states
from which some scheduler avoids the target (graph analysis), and
expected cost demands almost-sure reachability under every scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (
    NoConvergence,
    RangeViolation,
    StateLimitExceeded,
    TargetNotAlmostSure,
    UnknownTargetError,
)
from .expr import Expr, Valuation, Value, eval_expr, pretty
from .compiler import (
    GCProgram,
    GuardedCommand,
    Outcome,
    RandomResolver,
    apply_outcome,
    fireable_commands,
    interpret_step,
    rates_for,
)
from .model import Chart, StateId, dfs_order, scope_decls
from .compiler import subst_vars

DEFAULT_EPS = 1e-9
DEFAULT_MAX_ITER = 10**6
DEFAULT_STATE_LIMIT = 10**6


@dataclass(frozen=True)
class FlatEdge:
    command_id: int
    trans_id: Optional[int]
    outcomes: tuple[tuple[Fraction, int, Fraction], ...]  # (prob, next index, cost)


@dataclass
class FlatSpace:
    program: GCProgram
    var_names: tuple[str, ...]
    states: list[tuple[Value, ...]]
    initial: int
    edges: list[dict[str, list[FlatEdge]]]  # per state: event -> fireable commands
    parents: list[Optional[tuple[int, str, int, int]]]  # BFS tree: (pre, event, cmd, outcome)
    _masks: dict[StateId, np.ndarray] = field(default_factory=dict)
    _csr: Optional[tuple] = None

    def valuation(self, idx: int) -> dict[str, Value]:
        return dict(zip(self.var_names, self.states[idx]))

    def __len__(self) -> int:
        return len(self.states)

    def mask(self, sid: StateId) -> np.ndarray:
        """Bit per flat state: is the chart state sid active there."""
        if sid not in self._masks:
            if sid not in self.program.activity:
                raise UnknownTargetError(sid)
            act = self.program.activity[sid]
            self._masks[sid] = np.array(
                [bool(eval_expr(act, self.valuation(i))) for i in range(len(self.states))]
            )
        return self._masks[sid]

    @property
    def target_masks(self) -> dict[StateId, np.ndarray]:
        for sid in self.program.activity:
            self.mask(sid)
        return self._masks

    def path_to(self, idx: int) -> list[tuple[str, int, int]]:
        """BFS path from the initial state: (event, command, outcome) steps."""
        steps = []
        while self.parents[idx] is not None:
            pre, event, cmd, out = self.parents[idx]
            steps.append((event, cmd, out))
            idx = pre
        steps.reverse()
        return steps

    def as_csr(self):
        """(choice_ptr, out_ptr, prob, nxt, cost, choice_info) view of the MDP."""
        if self._csr is not None:
            return self._csr
        choice_ptr = [0]
        out_ptr = [0]
        probs: list[float] = []
        nxts: list[int] = []
        costs: list[float] = []
        choice_info: list[tuple[int, str, int]] = []  # (state, event, command)
        for s, by_event in enumerate(self.edges):
            for event in self.program.events:
                for edge in by_event.get(event, ()):
                    for p, nxt, cost in edge.outcomes:
                        probs.append(float(p))
                        nxts.append(nxt)
                        costs.append(float(cost))
                    out_ptr.append(len(probs))
                    choice_info.append((s, event, edge.command_id))
            choice_ptr.append(len(choice_info))
        self._csr = (
            np.array(choice_ptr, dtype=np.int64),
            np.array(out_ptr, dtype=np.int64),
            np.array(probs, dtype=np.float64),
            np.array(nxts, dtype=np.int64),
            np.array(costs, dtype=np.float64),
            choice_info,
        )
        return self._csr


def enumerate_states(p: GCProgram, limit: int = DEFAULT_STATE_LIMIT) -> FlatSpace:
    """Breadth-first reachable flat space under all events and outcomes."""
    if limit <= 0:
        raise ValueError("state limit must be positive")
    var_names = tuple(v.name for v in p.region_map.variables)
    init = tuple(p.region_map.initial[n] for n in var_names)
    states = [init]
    index = {init: 0}
    edges: list[dict[str, list[FlatEdge]]] = []
    parents: list[Optional[tuple[int, str, int, int]]] = [None]

    s = 0
    while s < len(states):
        v = dict(zip(var_names, states[s]))
        by_event: dict[str, list[FlatEdge]] = {}
        for event in p.events:
            fireable = fireable_commands(p, v, event)
            if not fireable:
                continue
            rate = rates_for(p, v) if event == "tick" and p.state_cost_rates else Fraction(0)
            lst = []
            for cmd in fireable:
                outs = []
                for oidx, outcome in enumerate(cmd.outcomes):
                    try:
                        nv = apply_outcome(p, v, outcome, cmd.source_trans)
                    except RangeViolation as exc:
                        exc.witness_path = _witness_path(parents, states, var_names, s, event)
                        raise
                    key = tuple(nv[n] for n in var_names)
                    if key not in index:
                        if len(states) >= limit:
                            raise StateLimitExceeded(limit)
                        index[key] = len(states)
                        states.append(key)
                        parents.append((s, event, cmd.id, oidx))
                    outs.append((outcome.prob, index[key], outcome.cost + rate))
                lst.append(FlatEdge(cmd.id, cmd.source_trans, tuple(outs)))
            by_event[event] = lst
        edges.append(by_event)
        s += 1

    return FlatSpace(p, var_names, states, 0, edges, parents)


def _witness_path(parents, states, var_names, idx, event):
    steps = []
    while parents[idx] is not None:
        pre, ev, cmd, out = parents[idx]
        steps.append(ev)
        idx = pre
    steps.reverse()
    steps.append(event)
    return steps


# ---------------------------------------------------------------------------
# Invariant checking


@dataclass(frozen=True)
class Violation:
    trans_id: Optional[int]
    command_id: Optional[int]
    state_id: StateId
    state_name: str
    invariant_text: str
    pre: Optional[dict[str, Value]]
    event: Optional[str]
    outcome_index: Optional[int]
    post: dict[str, Value]
    path: tuple[tuple[str, int, int], ...]  # BFS steps from the initial state

    def to_json(self) -> dict:
        return {
            "transId": self.trans_id,
            "commandId": self.command_id,
            "stateId": self.state_id,
            "stateName": self.state_name,
            "invariant": self.invariant_text,
            "pre": self.pre,
            "event": self.event,
            "outcomeIndex": self.outcome_index,
            "post": self.post,
            "path": [list(step) for step in self.path],
        }


def _checked_invariants(chart: Chart, p: GCProgram) -> list[tuple[StateId, str, Expr, Expr]]:
    """(state, name, activity, renamed own invariant) for every state that
    declares one. Checking own invariants of all active states is
    equivalent to checking their accumulated invariants: the ancestors of
    an active state are active and checked themselves."""
    out = []
    for sid in dfs_order(chart):
        st = chart.states[sid]
        if st.invariant is None:
            continue
        rename = {
            name: p.region_map.data_names[(owner, name)]
            for name, (owner, _) in scope_decls(chart, sid).items()
        }
        out.append((sid, st.name, p.activity[sid], subst_vars(st.invariant, rename)))
    return out


def check_invariants(chart: Chart, p: GCProgram, limit: int = DEFAULT_STATE_LIMIT) -> list[Violation]:
    """All reachable invariant violations, one per (transition, state),
    each with its breadth-first minimal witness."""
    fs = enumerate_states(p, limit)
    checked = _checked_invariants(chart, p)
    if not checked:
        return []
    violations: dict[tuple, Violation] = {}

    def failing(idx: int) -> list[tuple[StateId, str, str]]:
        v = fs.valuation(idx)
        out = []
        for sid, name, activity, inv in checked:
            if eval_expr(activity, v) and not eval_expr(inv, v):
                out.append((sid, name, pretty(chart.states[sid].invariant)))
        return out

    for sid, name, text in failing(fs.initial):
        key = (None, sid)
        violations[key] = Violation(
            trans_id=None, command_id=None, state_id=sid, state_name=name,
            invariant_text=text, pre=None, event=None, outcome_index=None,
            post=fs.valuation(fs.initial), path=(),
        )

    for s in range(len(fs)):
        for event in p.events:
            for edge in fs.edges[s].get(event, ()):
                for oidx, (prob, nxt, cost) in enumerate(edge.outcomes):
                    for sid, name, text in failing(nxt):
                        key = (edge.trans_id if edge.trans_id is not None else ("cmd", edge.command_id), sid)
                        if key in violations:
                            continue
                        violations[key] = Violation(
                            trans_id=edge.trans_id,
                            command_id=edge.command_id,
                            state_id=sid,
                            state_name=name,
                            invariant_text=text,
                            pre=fs.valuation(s),
                            event=event,
                            outcome_index=oidx,
                            post=fs.valuation(nxt),
                            path=tuple(fs.path_to(s)),
                        )
    return sorted(
        violations.values(),
        key=lambda v: (v.command_id if v.command_id is not None else -1, v.state_id),
    )


# ---------------------------------------------------------------------------
# Conflicts


@dataclass(frozen=True)
class Conflict:
    state_index: int
    event: str
    command_ids: tuple[int, ...]
    valuation: dict[str, Value]


def check_conflicts(p: GCProgram, fs: FlatSpace) -> list[Conflict]:
    """Flat states where two or more equal-priority commands could fire.

    The fireable set is the maximal enabled priority level, so shadowed
    lower-priority commands never conflict.
    """
    out = []
    for s in range(len(fs)):
        for event in p.events:
            edges = fs.edges[s].get(event, ())
            if len(edges) >= 2:
                out.append(Conflict(s, event, tuple(e.command_id for e in edges), fs.valuation(s)))
    return out


# ---------------------------------------------------------------------------
# Qualitative precomputations


def _avoid_set(fs: FlatSpace, target: np.ndarray) -> np.ndarray:
    """States from which some scheduler avoids the target forever:
    the greatest set U of non-target states where each member either
    deadlocks or has a choice whose outcomes all stay in U."""
    cp, op, prob, nxt, cost, info = fs.as_csr()
    n = len(fs)
    in_u = ~target.copy()
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if not in_u[s]:
                continue
            c0, c1 = cp[s], cp[s + 1]
            if c0 == c1:
                continue  # deadlock: trivially avoids
            ok = False
            for c in range(c0, c1):
                if all(in_u[nxt[o]] for o in range(op[c], op[c + 1])):
                    ok = True
                    break
            if not ok:
                in_u[s] = False
                changed = True
    return in_u


def _can_reach_avoiding_target(fs: FlatSpace, seeds: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Backward closure: states with a positive-probability target-avoiding
    path into seeds (any choice, any outcome)."""
    cp, op, prob, nxt, cost, info = fs.as_csr()
    n = len(fs)
    reach = seeds.copy()
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if reach[s] or target[s]:
                continue
            c0, c1 = cp[s], cp[s + 1]
            for c in range(c0, c1):
                if any(reach[nxt[o]] for o in range(op[c], op[c + 1])):
                    reach[s] = True
                    changed = True
                    break
    return reach


# ---------------------------------------------------------------------------
# Quantitative queries


@dataclass(frozen=True)
class ProbabilityResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    state_count: int
    mode: str
    target: StateId

    def to_json(self) -> dict:
        return {
            "query": f"P{self.mode}",
            "target": self.target,
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "stateCount": self.state_count,
        }


@dataclass(frozen=True)
class CostResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    state_count: int
    mode: str
    target: StateId

    def to_json(self) -> dict:
        return {
            "query": f"E{self.mode}",
            "target": self.target,
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "stateCount": self.state_count,
        }


def reachability(
    fs: FlatSpace,
    target: StateId,
    mode: str = "max",
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ProbabilityResult:
    """Extremal probability of eventually activating the target state."""
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    tmask = fs.mask(target)
    cp, op, prob, nxt, cost, info = fs.as_csr()
    minimize = mode == "min"
    if minimize:
        frozen = _avoid_set(fs, tmask)
    else:
        frozen = np.zeros(len(fs), dtype=bool)
    x, iters, resid = _kernels.reach_values(cp, op, prob, nxt, tmask, frozen, minimize, eps, max_iter)
    if resid >= eps:
        raise NoConvergence(max_iter, resid)
    return ProbabilityResult(float(x[fs.initial]), x, iters, resid, len(fs), mode, target)


def expected_cost(
    fs: FlatSpace,
    target: StateId,
    mode: str = "min",
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CostResult:
    """Extremal expected accumulated cost until the target activates.

    Defined only when every scheduler reaches the target almost surely;
    verified by graph analysis before iterating.
    """
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    tmask = fs.mask(target)
    avoid = _avoid_set(fs, tmask)
    risky = _can_reach_avoiding_target(fs, avoid, tmask)
    if risky[fs.initial] and not tmask[fs.initial]:
        if avoid[fs.initial]:
            witness_idx = fs.initial
        else:
            witness_idx = int(np.argmax(avoid)) if avoid.any() else fs.initial
        witness = (
            f"a scheduler can avoid the target from state {fs.valuation(witness_idx)}"
        )
        raise TargetNotAlmostSure(mode, witness)
    cp, op, prob, nxt, cost, info = fs.as_csr()
    x, iters, resid = _kernels.cost_values(cp, op, prob, nxt, cost, tmask, mode == "min", eps, max_iter)
    if resid >= eps:
        raise NoConvergence(max_iter, resid)
    return CostResult(float(x[fs.initial]), x, iters, resid, len(fs), mode, target)


# ---------------------------------------------------------------------------
# Simulation


@dataclass(frozen=True)
class TraceStep:
    event: str
    command_id: Optional[int]
    valuation: dict[str, Value]
    cost: Fraction


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]

    @property
    def total_cost(self) -> Fraction:
        return sum((s.cost for s in self.steps), Fraction(0))


def simulate(p: GCProgram, script: list[str], seed: int = 0) -> Trace:
    """Run a scripted event sequence with seeded random resolution."""
    resolver = RandomResolver(seed)
    v = dict(p.region_map.initial)
    steps = []
    for i, event in enumerate(script):
        try:
            v, cost, cid = interpret_step(p, v, event, resolver)
        except RangeViolation as exc:
            raise RangeViolation(exc.var, exc.value, exc.trans_id, step=i) from None
        steps.append(TraceStep(event, cid, dict(v), cost))
    return Trace(tuple(steps))
