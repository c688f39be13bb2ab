"""The `.pchart` JSON document format.

A document is a single JSON object with explicit integer ids. Expressions,
labels, and rationals are stored as canonical text, so the file format and
the rendered chart share one syntax. serialize_chart is deterministic:
fixed key order, numerically sorted id keys, canonicalized expression text.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Optional

from .errors import (
    ExprSyntaxError,
    InvariantViolationError,
    JsonSyntaxError,
    SchemaViolation,
)
from .expr import (
    Expr,
    IntLit,
    TransitionLabel,
    format_actions,
    format_label,
    format_rational,
    parse_actions,
    parse_expr,
    parse_label,
    pretty,
    BOOL,
    int_range,
)
from .geometry import Point, Rect
from .model import (
    Chart,
    Cond,
    Goto,
    Prob,
    Query,
    State,
    Transition,
    TransitionTree,
    VarDecl,
    validate,
)

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Decoding helpers


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaViolation(f"{path}/{key}", "required field is missing")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], path: str):
    if not isinstance(obj, dict):
        raise SchemaViolation(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            raise SchemaViolation(f"{path}/{k}", "unknown field")


def _as_int(v: Any, path: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaViolation(path, f"expected an integer, got {type(v).__name__}")
    return v


def _as_str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise SchemaViolation(path, f"expected a string, got {type(v).__name__}")
    return v


def _as_number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaViolation(path, f"expected a number, got {type(v).__name__}")
    return float(v)


def _as_rational(v: Any, path: str) -> Fraction:
    """Rationals travel as strings ("1/2", "0.5", "2") or integers; floats
    are rejected to keep the model exact."""
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise SchemaViolation(path, f"not a rational: {v!r}") from None
    raise SchemaViolation(path, "rationals must be strings or integers (floats are inexact)")


def _as_rect(v: Any, path: str) -> Rect:
    if not isinstance(v, list) or len(v) != 4:
        raise SchemaViolation(path, "expected [x, y, w, h]")
    x, y, w, h = (_as_number(c, f"{path}/{i}") for i, c in enumerate(v))
    if w < 0 or h < 0:
        raise SchemaViolation(path, "width and height must be nonnegative")
    return Rect(x, y, w, h)


def _as_point(v: Any, path: str) -> Point:
    if not isinstance(v, list) or len(v) != 2:
        raise SchemaViolation(path, "expected [x, y]")
    return Point(_as_number(v[0], f"{path}/0"), _as_number(v[1], f"{path}/1"))


def _as_expr(v: Any, path: str) -> Expr:
    text = _as_str(v, path)
    try:
        return parse_expr(text)
    except ExprSyntaxError as e:
        raise SchemaViolation(path, str(e)) from None


def _id_key(key: str, path: str) -> int:
    if not key.isdigit():
        raise SchemaViolation(f"{path}/{key}", "id keys must be decimal integers")
    return int(key)


# ---------------------------------------------------------------------------
# Decoding


def _decode_vardecl(v: Any, path: str) -> VarDecl:
    _check_keys(v, {"name", "type", "init", "comment"}, path)
    name = _as_str(_require(v, "name", path), f"{path}/name")
    tspec = _require(v, "type", path)
    if tspec == "bool":
        vtype = BOOL
    elif isinstance(tspec, list) and len(tspec) == 2:
        lo = _as_int(tspec[0], f"{path}/type/0")
        hi = _as_int(tspec[1], f"{path}/type/1")
        if lo > hi:
            raise SchemaViolation(f"{path}/type", f"range {lo}..{hi} is empty")
        vtype = int_range(lo, hi)
    else:
        raise SchemaViolation(f"{path}/type", 'expected "bool" or [lo, hi]')
    init = _as_expr(_require(v, "init", path), f"{path}/init")
    comment = None
    if v.get("comment") is not None:
        comment = _as_str(v["comment"], f"{path}/comment")
    return VarDecl(name, vtype, init, comment)


def _decode_tree(v: Any, path: str) -> TransitionTree:
    if not isinstance(v, dict) or len(v) != 1:
        raise SchemaViolation(path, 'expected one of {"goto": ...}, {"prob": ...}, {"cond": ...}')
    (tag, body), = v.items()
    p = f"{path}/{tag}"
    if tag == "goto":
        _check_keys(body, {"target", "actions", "cost", "waypoints"}, p)
        target = _as_int(_require(body, "target", p), f"{p}/target")
        actions = ()
        if "actions" in body:
            try:
                actions = parse_actions(_as_str(body["actions"], f"{p}/actions"))
            except ExprSyntaxError as e:
                raise SchemaViolation(f"{p}/actions", str(e)) from None
        cost = _as_rational(body["cost"], f"{p}/cost") if "cost" in body else Fraction(0)
        if cost < 0:
            raise SchemaViolation(f"{p}/cost", "cost must be nonnegative")
        waypoints = tuple(
            _as_point(w, f"{p}/waypoints/{i}") for i, w in enumerate(body.get("waypoints", []))
        )
        return Goto(target, actions, cost, waypoints)
    if tag == "prob":
        _check_keys(body, {"node", "pos", "branches"}, p)
        node = _as_int(_require(body, "node", p), f"{p}/node")
        pos = _as_point(_require(body, "pos", p), f"{p}/pos")
        raw = _require(body, "branches", p)
        if not isinstance(raw, list) or len(raw) < 1:
            raise SchemaViolation(f"{p}/branches", "expected a non-empty list")
        branches = []
        for i, b in enumerate(raw):
            bp = f"{p}/branches/{i}"
            _check_keys(b, {"p", "to"}, bp)
            prob = _as_rational(_require(b, "p", bp), f"{bp}/p")
            branches.append((prob, _decode_tree(_require(b, "to", bp), f"{bp}/to")))
        return Prob(node, pos, tuple(branches))
    if tag == "cond":
        _check_keys(body, {"node", "pos", "branches", "else"}, p)
        node = _as_int(_require(body, "node", p), f"{p}/node")
        pos = _as_point(_require(body, "pos", p), f"{p}/pos")
        raw = _require(body, "branches", p)
        if not isinstance(raw, list) or len(raw) < 1:
            raise SchemaViolation(f"{p}/branches", "expected a non-empty list")
        branches = []
        for i, b in enumerate(raw):
            bp = f"{p}/branches/{i}"
            _check_keys(b, {"if", "to"}, bp)
            guard = _as_expr(_require(b, "if", bp), f"{bp}/if")
            branches.append((guard, _decode_tree(_require(b, "to", bp), f"{bp}/to")))
        els = None
        if "else" in body:
            els = _decode_tree(body["else"], f"{p}/else")
        return Cond(node, pos, tuple(branches), els)
    raise SchemaViolation(path, f"unknown tree node kind {tag!r}")


def _decode_state(sid: int, v: Any, path: str) -> State:
    _check_keys(
        v,
        {"name", "kind", "children", "initial", "variables", "invariant",
         "costRate", "comment", "box"},
        path,
    )
    name = _as_str(_require(v, "name", path), f"{path}/name")
    kind = _as_str(_require(v, "kind", path), f"{path}/kind")
    if kind not in ("basic", "xor", "and"):
        raise SchemaViolation(f"{path}/kind", f'expected "basic", "xor", or "and", got {kind!r}')
    children = tuple(
        _as_int(c, f"{path}/children/{i}") for i, c in enumerate(v.get("children", []))
    )
    initial = None
    if kind == "xor":
        initial = _as_int(_require(v, "initial", path), f"{path}/initial")
    elif "initial" in v:
        raise SchemaViolation(f"{path}/initial", f"{kind} states take no initial child")
    variables = tuple(
        _decode_vardecl(d, f"{path}/variables/{i}") for i, d in enumerate(v.get("variables", []))
    )
    invariant = _as_expr(v["invariant"], f"{path}/invariant") if "invariant" in v else None
    cost_rate = _as_rational(v["costRate"], f"{path}/costRate") if "costRate" in v else None
    comment = _as_str(v["comment"], f"{path}/comment") if v.get("comment") is not None else None
    box = _as_rect(_require(v, "box", path), f"{path}/box")
    return State(sid, name, kind, children, initial, variables, invariant, cost_rate, comment, box)


def _decode_transition(tid: int, v: Any, path: str) -> Transition:
    _check_keys(v, {"source", "label", "body", "comment"}, path)
    source = _as_int(_require(v, "source", path), f"{path}/source")
    label_text = _as_str(_require(v, "label", path), f"{path}/label")
    try:
        label = parse_label(label_text)
    except ExprSyntaxError as e:
        raise SchemaViolation(f"{path}/label", str(e)) from None
    body = _decode_tree(_require(v, "body", path), f"{path}/body")
    if isinstance(body, Goto):
        # Plain transitions carry actions and cost in the label text.
        if body.actions or body.cost != 0:
            raise SchemaViolation(f"{path}/body/goto",
                                  "actions/cost of a plain transition belong in the label")
        body = Goto(body.target, label.actions, label.cost or Fraction(0), body.waypoints)
    elif label.actions or label.cost is not None:
        raise SchemaViolation(f"{path}/label",
                              "actions/cost of a branching transition belong on its leaves")
    comment = _as_str(v["comment"], f"{path}/comment") if v.get("comment") is not None else None
    return Transition(tid, source, label.trigger, label.guard, body, comment)


def chart_from_json(doc: Any) -> Chart:
    """Build a Chart from a decoded JSON document; schema errors only."""
    _check_keys(
        doc,
        {"formatVersion", "name", "root", "nextId", "states", "transitions",
         "queries", "labelOverrides"},
        "",
    )
    version = _require(doc, "formatVersion", "")
    if version != FORMAT_VERSION:
        raise SchemaViolation("/formatVersion", f"unsupported version {version!r}")
    name = _as_str(_require(doc, "name", ""), "/name")
    root = _as_int(_require(doc, "root", ""), "/root")
    next_id = _as_int(_require(doc, "nextId", ""), "/nextId")

    raw_states = _require(doc, "states", "")
    if not isinstance(raw_states, dict):
        raise SchemaViolation("/states", "expected an object keyed by state id")
    states = {}
    for key in raw_states:
        sid = _id_key(key, "states")
        states[sid] = _decode_state(sid, raw_states[key], f"states/{key}")

    raw_trans = doc.get("transitions", {})
    if not isinstance(raw_trans, dict):
        raise SchemaViolation("/transitions", "expected an object keyed by transition id")
    transitions = {}
    for key in raw_trans:
        tid = _id_key(key, "transitions")
        transitions[tid] = _decode_transition(tid, raw_trans[key], f"transitions/{key}")

    queries = []
    raw_queries = doc.get("queries", [])
    if not isinstance(raw_queries, list):
        raise SchemaViolation("/queries", "expected a list")
    for i, q in enumerate(raw_queries):
        qp = f"queries/{i}"
        _check_keys(q, {"id", "kind", "target", "attachedTo"}, qp)
        queries.append(
            Query(
                _as_int(_require(q, "id", qp), f"{qp}/id"),
                _as_str(_require(q, "kind", qp), f"{qp}/kind"),
                _as_int(_require(q, "target", qp), f"{qp}/target"),
                _as_int(_require(q, "attachedTo", qp), f"{qp}/attachedTo"),
            )
        )

    overrides = {}
    raw_over = doc.get("labelOverrides", {})
    if not isinstance(raw_over, dict):
        raise SchemaViolation("/labelOverrides", "expected an object keyed by connection id")
    for key in raw_over:
        overrides[key] = _as_rect(raw_over[key], f"labelOverrides/{key}")

    return Chart(name, root, states, transitions, tuple(queries), next_id, overrides)


def parse_chart(text: str) -> Chart:
    """Parse and fully validate a `.pchart` document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise JsonSyntaxError(e.lineno, e.colno, e.msg) from None
    chart = chart_from_json(doc)
    errors = [d for d in validate(chart) if d.severity == "error"]
    if errors:
        raise InvariantViolationError(errors[0].object_id, errors[0].message)
    return chart


# ---------------------------------------------------------------------------
# Encoding


def _num(x: float):
    """Integral coordinates serialize as ints for tidy documents."""
    return int(x) if isinstance(x, float) and x.is_integer() else x


def _rect_json(r: Rect) -> list:
    return [_num(r.x), _num(r.y), _num(r.w), _num(r.h)]


def _point_json(p: Point) -> list:
    return [_num(p.x), _num(p.y)]


def _encode_tree(tree: TransitionTree, top: bool) -> dict:
    if isinstance(tree, Goto):
        body: dict[str, Any] = {"target": tree.target}
        if not top:
            if tree.actions:
                body["actions"] = format_actions(tree.actions)
            if tree.cost != 0:
                body["cost"] = format_rational(tree.cost)
        if tree.waypoints:
            body["waypoints"] = [_point_json(p) for p in tree.waypoints]
        return {"goto": body}
    if isinstance(tree, Prob):
        return {
            "prob": {
                "node": tree.node,
                "pos": _point_json(tree.pos),
                "branches": [
                    {"p": format_rational(p), "to": _encode_tree(sub, False)}
                    for p, sub in tree.branches
                ],
            }
        }
    out = {
        "cond": {
            "node": tree.node,
            "pos": _point_json(tree.pos),
            "branches": [
                {"if": pretty(g), "to": _encode_tree(sub, False)} for g, sub in tree.branches
            ],
        }
    }
    if tree.else_branch is not None:
        out["cond"]["else"] = _encode_tree(tree.else_branch, False)
    return out


def _transition_label_text(tr: Transition) -> str:
    actions = ()
    cost = None
    if isinstance(tr.body, Goto):
        actions = tr.body.actions
        cost = tr.body.cost if tr.body.cost != 0 else None
    return format_label(TransitionLabel(tr.trigger, tr.guard, actions, cost))


def chart_to_json(chart: Chart) -> dict:
    states = {}
    for sid in sorted(chart.states):
        st = chart.states[sid]
        out: dict[str, Any] = {"name": st.name, "kind": st.kind}
        if st.children:
            out["children"] = list(st.children)
        if st.initial is not None:
            out["initial"] = st.initial
        if st.variables:
            decls = []
            for d in st.variables:
                dv: dict[str, Any] = {
                    "name": d.name,
                    "type": "bool" if d.vtype.base == "bool" else [d.vtype.lo, d.vtype.hi],
                    "init": pretty(d.init),
                }
                if d.comment is not None:
                    dv["comment"] = d.comment
                decls.append(dv)
            out["variables"] = decls
        if st.invariant is not None:
            out["invariant"] = pretty(st.invariant)
        if st.cost_rate is not None:
            out["costRate"] = format_rational(st.cost_rate)
        if st.comment is not None:
            out["comment"] = st.comment
        out["box"] = _rect_json(st.box)
        states[str(sid)] = out

    transitions = {}
    for tid in sorted(chart.transitions):
        tr = chart.transitions[tid]
        out = {
            "source": tr.source,
            "label": _transition_label_text(tr),
            "body": _encode_tree(tr.body, top=True),
        }
        if tr.comment is not None:
            out["comment"] = tr.comment
        transitions[str(tid)] = out

    doc: dict[str, Any] = {
        "formatVersion": FORMAT_VERSION,
        "name": chart.name,
        "root": chart.root,
        "nextId": chart.next_id,
        "states": states,
        "transitions": transitions,
        "queries": [
            {"id": q.id, "kind": q.kind, "target": q.target, "attachedTo": q.attached_to}
            for q in chart.queries
        ],
    }
    if chart.label_overrides:
        doc["labelOverrides"] = {
            k: _rect_json(r) for k, r in sorted(chart.label_overrides.items())
        }
    return doc


def serialize_chart(chart: Chart) -> str:
    """Deterministic canonical document text (LF, trailing newline)."""
    return json.dumps(chart_to_json(chart), indent=2, ensure_ascii=False) + "\n"
