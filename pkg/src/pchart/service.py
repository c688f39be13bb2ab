"""Editor actions and the chart synchronization protocol.

Actions are JSON-tagged edits applied as pure functions: a failing action
returns the original chart plus diagnostics, never a partial edit. The
server holds one authoritative chart per id, applies action batches in
arrival order, persists every accepted batch, and broadcasts the full
serialized chart plus a recomputed display list to every attached session
(full-state replacement, no diffs).

Message envelope: {"type", "chartId", "seq", "payload"}. Incoming seq must
strictly increase per session; outgoing seq increases per session on the
server side. Protocol errors are replies, never dropped sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .analysis import check_invariants, enumerate_states, expected_cost, reachability
from .chartio import chart_from_json, chart_to_json, parse_chart, serialize_chart
from .codegen import gen_c, gen_prism
from .compiler import compile_chart, pretty_print
from .errors import PchartError, SchemaViolation
from .expr import ExprSyntaxError, parse_expr, parse_label, parse_vardecl
from .geometry import Point, Rect
from .model import (
    Chart,
    Diagnostic,
    Goto,
    Query,
    State,
    StateId,
    Transition,
    VarDecl,
    error,
    is_ancestor,
    parent_map,
    tree_leaves,
    tree_nodes,
    validate,
)
from .render import build_display_list, display_list_to_json

PROTOCOL_TYPES = (
    "hello", "chart_state", "apply_actions", "action_ack", "error",
    "analysis_request", "analysis_result", "display_list",
)


# ---------------------------------------------------------------------------
# Editor actions


def _diag(msg: str, object_id=None) -> list[Diagnostic]:
    return [error(object_id, msg)]


def _fresh_name(chart: Chart, parent: State, base: str) -> str:
    taken = {chart.states[c].name for c in parent.children if c in chart.states}
    if base not in taken:
        return base
    i = 2
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _auto_box(chart: Chart, parent: State) -> tuple[Rect, bool]:
    """Stack new children below the existing ones. Shrinks to the parent's
    free space when possible; otherwise asks for ancestor growth."""
    w, h = 120.0, 70.0
    floor = [chart.states[c].box.y2 for c in parent.children if c in chart.states]
    y = (max(floor) if floor else parent.box.y + 24) + 8
    x = parent.box.x + 15
    fit_w = min(w, parent.box.x2 - 15 - x)
    fit_h = min(h, parent.box.y2 - 10 - y)
    if fit_w >= 40 and fit_h >= 24:
        return Rect(x, y, fit_w, fit_h), False
    return Rect(x, y, w, h), True


def _grow_to_fit(states: dict[StateId, State], chart: Chart, sid: StateId):
    """Expand sid's box and its ancestors' boxes to contain their children."""
    parents = parent_map(chart)
    cur = sid
    while True:
        st = states[cur]
        kids = [states[c].box for c in st.children if c in states]
        if kids:
            x2 = max(st.box.x2, max(k.x2 for k in kids) + 15)
            y2 = max(st.box.y2, max(k.y2 for k in kids) + 15)
            x1 = min(st.box.x, min(k.x for k in kids) - 15)
            y1 = min(st.box.y, min(k.y for k in kids) - 24)
            states[cur] = replace(st, box=Rect(x1, y1, x2 - x1, y2 - y1))
        if cur not in parents:
            break
        cur = parents[cur]


def _checked(chart: Chart, new_chart: Chart) -> tuple[Chart, list[Diagnostic]]:
    problems = [d for d in validate(new_chart) if d.severity == "error"]
    if problems:
        return chart, problems
    return new_chart, []


def _add_state(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    parent_id = payload.get("parent")
    kind = payload.get("kind", "basic")
    if parent_id not in chart.states:
        return chart, _diag(f"parent state {parent_id} does not exist")
    if kind not in ("basic", "xor", "and"):
        return chart, _diag(f"unknown state kind {kind!r}")
    parent = chart.states[parent_id]

    states = dict(chart.states)
    next_id = chart.next_id

    if parent.kind == "basic":
        # drawing into a leaf turns it into a composite
        parent = replace(parent, kind="xor")
    elif parent.kind == "and" and kind == "and":
        return chart, _diag("children of an and state must be xor or basic", parent_id)

    def alloc() -> int:
        nonlocal next_id
        i = next_id
        next_id += 1
        return i

    sid = alloc()
    if "box" in payload:
        box, grow = Rect(*payload["box"]), False
    else:
        box, grow = _auto_box(chart, parent)
    name = payload.get("name") or _fresh_name(chart, parent, "S")
    children: list[int] = []
    initial = None
    if kind == "xor":
        inner = alloc()
        states[inner] = State(inner, "Init", "basic",
                              box=Rect(box.x + 15, box.y + 24, min(90, box.w - 30),
                                       min(50, box.h - 39)))
        children = [inner]
        initial = inner
    elif kind == "and":
        kids = []
        half = (box.w - 45) / 2
        for i in range(2):
            region = alloc()
            leaf = alloc()
            rbox = Rect(box.x + 15 + i * (half + 15), box.y + 24, half, box.h - 39)
            states[leaf] = State(leaf, "Init", "basic",
                                 box=Rect(rbox.x + 10, rbox.y + 20, max(10, rbox.w - 20),
                                          max(10, rbox.h - 30)))
            states[region] = State(region, f"R{i + 1}", "xor", children=(leaf,),
                                   initial=leaf, box=rbox)
            kids.append(region)
        children = kids

    states[sid] = State(sid, name, kind, tuple(children), initial, box=box)
    states[parent_id] = replace(
        parent,
        children=parent.children + (sid,),
        initial=sid if parent.kind == "xor" and parent.initial is None else parent.initial,
    )
    if grow:
        _grow_to_fit(states, chart, parent_id)
    return _checked(chart, chart.with_replacements(states=states, next_id=next_id))


def _rename_state(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    sid = payload.get("id")
    name = payload.get("name", "")
    if sid not in chart.states:
        return chart, _diag(f"state {sid} does not exist")
    states = dict(chart.states)
    states[sid] = replace(states[sid], name=name)
    return _checked(chart, chart.with_replacements(states=states))


def _move_state(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    sid = payload.get("id")
    if sid not in chart.states:
        return chart, _diag(f"state {sid} does not exist")
    box = Rect(*payload["box"])
    old = chart.states[sid].box
    dx, dy = box.x - old.x, box.y - old.y
    states = dict(chart.states)

    def shift(s: StateId, dx: float, dy: float):
        st = states[s]
        states[s] = replace(st, box=Rect(st.box.x + dx, st.box.y + dy, st.box.w, st.box.h))
        for c in st.children:
            shift(c, dx, dy)

    states[sid] = replace(states[sid], box=box)
    for c in chart.states[sid].children:
        shift(c, dx, dy)
    return _checked(chart, chart.with_replacements(states=states))


def _delete_state(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    sid = payload.get("id")
    if sid not in chart.states:
        return chart, _diag(f"state {sid} does not exist")
    if sid == chart.root:
        return chart, _diag("cannot delete the root state", sid)

    doomed = {sid}
    changed = True
    while changed:
        changed = False
        for s, st in chart.states.items():
            if s in doomed:
                for c in st.children:
                    if c not in doomed:
                        doomed.add(c)
                        changed = True

    parents = parent_map(chart)
    parent_id = parents[sid]
    parent = chart.states[parent_id]
    remaining = tuple(c for c in parent.children if c != sid)

    states = {s: st for s, st in chart.states.items() if s not in doomed}
    if parent.kind == "xor":
        if not remaining:
            parent = replace(parent, kind="basic", children=(), initial=None)
        elif parent.initial == sid:
            parent = replace(parent, children=remaining, initial=remaining[0])
        else:
            parent = replace(parent, children=remaining)
    else:
        if len(remaining) < 2:
            return chart, _diag("an and state needs two children; delete it instead", parent_id)
        parent = replace(parent, children=remaining)
    states[parent_id] = parent

    transitions = {}
    for tid, tr in chart.transitions.items():
        if tr.source in doomed:
            continue
        if any(leaf.target in doomed for leaf in tree_leaves(tr.body)):
            continue
        transitions[tid] = tr
    queries = tuple(q for q in chart.queries
                    if q.target not in doomed and q.attached_to not in doomed)
    overrides = {
        cid: r for cid, r in chart.label_overrides.items()
        if int(cid.split(":")[0]) in transitions
    }
    return _checked(chart, chart.with_replacements(
        states=states, transitions=transitions, queries=queries, label_overrides=overrides))


def _decode_body_spec(spec: Any, alloc) -> Any:
    """Body tree from action JSON; pseudo-node ids are allocated here."""
    from .chartio import _decode_tree

    def fill_ids(node: Any) -> Any:
        if not isinstance(node, dict) or len(node) != 1:
            return node
        (tag, body), = node.items()
        if tag == "goto":
            return node
        body = dict(body)
        if "node" not in body:
            body["node"] = alloc()
        if "pos" not in body:
            body["pos"] = [0, 0]
        if tag in ("prob", "cond"):
            body["branches"] = [
                {**b, "to": fill_ids(b["to"])} for b in body.get("branches", [])
            ]
            if tag == "cond" and "else" in body:
                body["else"] = fill_ids(body["else"])
        return {tag: body}

    return _decode_tree(fill_ids(spec), "bodySpec")


def _add_transition(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    source = payload.get("source")
    if source not in chart.states:
        return chart, _diag(f"source state {source} does not exist")
    try:
        label = parse_label(payload.get("label", ""))
    except ExprSyntaxError as e:
        return chart, _diag(f"label: {e}")

    next_id = chart.next_id

    def alloc() -> int:
        nonlocal next_id
        i = next_id
        next_id += 1
        return i

    tid = alloc()
    spec = payload.get("body")
    if spec is None and "target" in payload:
        spec = {"goto": {"target": payload["target"]}}
    if spec is None:
        return chart, _diag("transition needs a body or target")
    try:
        body = _decode_body_spec(spec, alloc)
    except (SchemaViolation, ExprSyntaxError) as e:
        return chart, _diag(f"body: {e}")
    if isinstance(body, Goto):
        body = replace(body, actions=label.actions,
                       cost=label.cost if label.cost is not None else Fraction(0))
    elif label.actions or label.cost is not None:
        return chart, _diag("actions/cost of a branching transition belong on its leaves")

    transitions = dict(chart.transitions)
    transitions[tid] = Transition(tid, source, label.trigger, label.guard, body,
                                  payload.get("comment"))
    return _checked(chart, chart.with_replacements(transitions=transitions, next_id=next_id))


def _edit_label(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    tid = payload.get("id")
    if tid not in chart.transitions:
        return chart, _diag(f"transition {tid} does not exist")
    try:
        label = parse_label(payload.get("label", ""))
    except ExprSyntaxError as e:
        return chart, _diag(f"label: {e}", tid)
    tr = chart.transitions[tid]
    body = tr.body
    if isinstance(body, Goto):
        body = replace(body, actions=label.actions,
                       cost=label.cost if label.cost is not None else Fraction(0))
    elif label.actions or label.cost is not None:
        return chart, _diag("actions/cost of a branching transition belong on its leaves", tid)
    transitions = dict(chart.transitions)
    transitions[tid] = replace(tr, trigger=label.trigger, guard=label.guard, body=body)
    return _checked(chart, chart.with_replacements(transitions=transitions))


def _move_label(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    cid = payload.get("connectionId", "")
    tid_text = cid.split(":")[0]
    if not tid_text.isdigit() or int(tid_text) not in chart.transitions:
        return chart, _diag(f"connection {cid!r} does not exist")
    overrides = dict(chart.label_overrides)
    if payload.get("rect") is None:
        overrides.pop(cid, None)  # clearing returns the label to the solver
    else:
        overrides[cid] = Rect(*payload["rect"])
    return chart.with_replacements(label_overrides=overrides), []


def _set_invariant(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    sid = payload.get("id")
    if sid not in chart.states:
        return chart, _diag(f"state {sid} does not exist")
    text = payload.get("text", "")
    if text.strip() == "":
        inv = None
    else:
        try:
            inv = parse_expr(text)
        except ExprSyntaxError as e:
            return chart, _diag(f"invariant: {e}", sid)
    states = dict(chart.states)
    states[sid] = replace(states[sid], invariant=inv)
    return _checked(chart, chart.with_replacements(states=states))


def _set_variable(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    sid = payload.get("id")
    if sid not in chart.states:
        return chart, _diag(f"state {sid} does not exist")
    text = payload.get("decl", "").strip()
    st = chart.states[sid]
    from .model import is_identifier

    if is_identifier(text):
        # a bare name deletes that declaration
        kept = tuple(d for d in st.variables if d.name != text)
        if len(kept) == len(st.variables):
            return chart, _diag(f"no variable {text!r} declared here", sid)
        decls = kept
    else:
        try:
            name, vtype, init, comment = parse_vardecl(text)
        except ExprSyntaxError as e:
            return chart, _diag(f"declaration: {e}", sid)
        new_decl = VarDecl(name, vtype, init, comment)
        if any(d.name == name for d in st.variables):
            decls = tuple(new_decl if d.name == name else d for d in st.variables)
        else:
            decls = st.variables + (new_decl,)
    states = dict(chart.states)
    states[sid] = replace(st, variables=decls)
    return _checked(chart, chart.with_replacements(states=states))


def _add_query(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    target = payload.get("target")
    kind = payload.get("kind")
    attached = payload.get("attachedTo", chart.root)
    q = Query(chart.next_id, kind, target, attached)
    return _checked(chart, chart.with_replacements(
        queries=chart.queries + (q,), next_id=chart.next_id + 1))


def _delete_transition(chart: Chart, payload: dict) -> tuple[Chart, list[Diagnostic]]:
    tid = payload.get("id")
    if tid not in chart.transitions:
        return chart, _diag(f"transition {tid} does not exist")
    transitions = {t: tr for t, tr in chart.transitions.items() if t != tid}
    overrides = {cid: r for cid, r in chart.label_overrides.items()
                 if int(cid.split(":")[0]) != tid}
    return chart.with_replacements(transitions=transitions, label_overrides=overrides), []


_ACTIONS = {
    "AddState": _add_state,
    "RenameState": _rename_state,
    "MoveState": _move_state,
    "DeleteState": _delete_state,
    "AddTransition": _add_transition,
    "EditLabel": _edit_label,
    "MoveLabelManual": _move_label,
    "SetInvariant": _set_invariant,
    "SetVariable": _set_variable,
    "AddQuery": _add_query,
    "DeleteTransition": _delete_transition,
}


def apply_action(chart: Chart, action: dict) -> tuple[Chart, list[Diagnostic]]:
    """Pure action application: the new chart, or the original plus the
    diagnostics that rejected the edit."""
    kind = action.get("action")
    handler = _ACTIONS.get(kind)
    if handler is None:
        return chart, _diag(f"unknown action {kind!r}")
    try:
        return handler(chart, action)
    except (PchartError, KeyError, TypeError, ValueError) as e:
        return chart, _diag(f"{kind}: {e}")


# ---------------------------------------------------------------------------
# Server state and message handling


@dataclass
class Session:
    session_id: str
    chart_id: Optional[str] = None
    last_in_seq: int = 0
    out_seq: int = 0
    capabilities: tuple[str, ...] = ()


@dataclass
class ServerState:
    charts: dict[str, Chart] = field(default_factory=dict)
    sessions: dict[str, Session] = field(default_factory=dict)
    action_log: dict[str, list[dict]] = field(default_factory=dict)
    directory: Optional[Path] = None

    @classmethod
    def from_directory(cls, directory: Path) -> "ServerState":
        state = cls(directory=Path(directory))
        for path in sorted(Path(directory).glob("*.pchart")):
            chart = parse_chart(path.read_text())
            state.charts[path.stem] = chart
        return state

    def save(self, chart_id: str):
        if self.directory is not None:
            (self.directory / f"{chart_id}.pchart").write_text(
                serialize_chart(self.charts[chart_id])
            )


def _reply(state: ServerState, session_id: str, mtype: str, chart_id: str,
           payload: dict) -> tuple[str, dict]:
    sess = state.sessions[session_id]
    sess.out_seq += 1
    return (session_id, {"type": mtype, "chartId": chart_id, "seq": sess.out_seq,
                         "payload": payload})


def _chart_messages(state: ServerState, chart_id: str, targets: list[str]) -> list[tuple[str, dict]]:
    chart = state.charts[chart_id]
    doc = chart_to_json(chart)
    dl = display_list_to_json(build_display_list(chart))
    out = []
    for sid in targets:
        out.append(_reply(state, sid, "chart_state", chart_id, {"chart": doc}))
        out.append(_reply(state, sid, "display_list", chart_id, {"displayList": dl}))
    return out


def _run_analysis(chart: Chart, params: dict) -> dict:
    kind = params.get("kind")
    if kind == "compile":
        return {"kind": "compile", "intermediate": pretty_print(compile_chart(chart))}
    if kind == "check":
        program = compile_chart(chart)
        violations = check_invariants(chart, program)
        return {"kind": "check", "violations": [v.to_json() for v in violations]}
    if kind == "query":
        program = compile_chart(chart)
        fs = enumerate_states(program)
        target = params.get("target")
        if isinstance(target, str):
            st = chart.state_by_name(target)
            if st is None:
                raise PchartError(f"no state named {target!r}")
            target = st.id
        qkind = params.get("queryKind", "Pmax")
        if qkind in ("Pmax", "Pmin"):
            result = reachability(fs, target, qkind[1:].lower())
        elif qkind in ("Emin", "Emax"):
            result = expected_cost(fs, target, qkind[1:].lower())
        else:
            raise PchartError(f"unknown query kind {qkind!r}")
        return {"kind": "query", "result": result.to_json()}
    if kind == "codegen":
        program = compile_chart(chart)
        target = params.get("target", "prism")
        if target == "c":
            unit = gen_c(program, chart)
            files = {f"{chart.name}.h": unit.header, f"{chart.name}.c": unit.source,
                     f"{chart.name}_harness.c": unit.harness}
        else:
            unit = gen_prism(program, chart)
            files = {f"{chart.name}.prism": unit.model, f"{chart.name}.props": unit.properties}
        return {"kind": "codegen", "target": target, "files": files}
    raise PchartError(f"unknown analysis kind {kind!r}")


def handle_message(state: ServerState, session_id: str, message: dict) -> list[tuple[str, dict]]:
    """Process one inbound message; returns (sessionId, message) replies,
    including broadcasts. State is updated in place; the chart values
    themselves are immutable snapshots."""
    if session_id not in state.sessions:
        state.sessions[session_id] = Session(session_id)
    sess = state.sessions[session_id]

    def err(text: str, diagnostics=None) -> list[tuple[str, dict]]:
        payload = {"message": text}
        if diagnostics:
            payload["diagnostics"] = [str(d) for d in diagnostics]
        return [_reply(state, session_id, "error", message.get("chartId", ""), payload)]

    if not isinstance(message, dict):
        return err("message must be a JSON object")
    mtype = message.get("type")
    chart_id = message.get("chartId")
    seq = message.get("seq")
    if mtype not in PROTOCOL_TYPES:
        return err(f"unknown message type {mtype!r}")
    if not isinstance(seq, int) or seq <= sess.last_in_seq:
        return err(f"stale or invalid seq {seq!r} (last was {sess.last_in_seq})")
    sess.last_in_seq = seq
    payload = message.get("payload") or {}

    if mtype == "hello":
        if chart_id not in state.charts:
            return err(f"unknown chart {chart_id!r}")
        sess.chart_id = chart_id
        sess.capabilities = tuple(payload.get("capabilities", ()))
        return _chart_messages(state, chart_id, [session_id])

    if sess.chart_id is None:
        return err("say hello first")
    if chart_id != sess.chart_id:
        return err(f"session is attached to {sess.chart_id!r}, not {chart_id!r}")

    if mtype == "apply_actions":
        actions = payload.get("actions", [])
        chart = state.charts[chart_id]
        new_chart = chart
        for i, action in enumerate(actions):
            new_chart, diags = apply_action(new_chart, action)
            problems = [d for d in diags if d.severity == "error"]
            if problems:
                return err(f"action {i} ({action.get('action')}) rejected", problems)
        state.charts[chart_id] = new_chart
        state.action_log.setdefault(chart_id, []).extend(actions)
        state.save(chart_id)
        out = [_reply(state, session_id, "action_ack", chart_id,
                      {"applied": len(actions)})]
        attached = [sid for sid, s in sorted(state.sessions.items())
                    if s.chart_id == chart_id]
        out.extend(_chart_messages(state, chart_id, attached))
        return out

    if mtype == "analysis_request":
        chart = state.charts[chart_id]
        try:
            result = _run_analysis(chart, payload)
        except PchartError as e:
            return err(f"analysis failed: {e}")
        return [_reply(state, session_id, "analysis_result", chart_id, result)]

    return err(f"client may not send {mtype!r}")
