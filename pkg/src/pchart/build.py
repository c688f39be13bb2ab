"""Programmatic chart construction.

The editor is not the only way to make a chart: ChartBuilder offers a
scripting interface that allocates ids, computes a simple nested box
layout, and validates the result. Used by the test fixtures, the demo
charts, and anyone driving the workbench from Python.

    b = ChartBuilder("toggle")
    off = b.basic(b.root_id, "Off", initial=True)
    on = b.basic(b.root_id, "On")
    b.trans(off, "E", to=on)
    chart = b.build()
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .expr import parse_expr, parse_label, parse_rational, parse_vardecl
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

BASIC_W, BASIC_H = 120, 70
PAD = 15
TITLE = 24


@dataclass
class _GotoSpec:
    target: int
    actions: str = ""
    cost: Union[str, int] = 0
    waypoints: Sequence[tuple[float, float]] = ()


@dataclass
class _ProbSpec:
    branches: list[tuple[str, "BodySpec"]]
    pos: Optional[tuple[float, float]] = None


@dataclass
class _CondSpec:
    branches: list[tuple[str, "BodySpec"]]
    els: Optional["BodySpec"] = None
    pos: Optional[tuple[float, float]] = None


BodySpec = Union[int, _GotoSpec, _ProbSpec, _CondSpec]


def goto(target: int, actions: str = "", cost: Union[str, int] = 0,
         waypoints: Sequence[tuple[float, float]] = ()) -> _GotoSpec:
    return _GotoSpec(target, actions, cost, waypoints)


def prob(*branches: tuple[str, BodySpec], pos=None) -> _ProbSpec:
    return _ProbSpec(list(branches), pos)


def cond(*branches: tuple[str, BodySpec], els: Optional[BodySpec] = None, pos=None) -> _CondSpec:
    return _CondSpec(list(branches), els, pos)


@dataclass
class _Draft:
    name: str
    kind: str
    parent: Optional[int]
    children: list[int] = field(default_factory=list)
    initial: Optional[int] = None
    variables: list[VarDecl] = field(default_factory=list)
    invariant: object = None
    cost_rate: Optional[Fraction] = None
    comment: Optional[str] = None


class ChartBuilder:
    def __init__(self, name: str, root_name: str = "root"):
        self.name = name
        self._next = 0
        self.root_id = self._alloc()
        self._drafts: dict[int, _Draft] = {self.root_id: _Draft(root_name, "xor", None)}
        self._transitions: list[tuple] = []
        self._queries: list[Query] = []

    def _alloc(self) -> int:
        i = self._next
        self._next += 1
        return i

    # states ----------------------------------------------------------------

    def _add_state(self, parent: int, name: str, kind: str, initial: bool) -> int:
        sid = self._alloc()
        self._drafts[sid] = _Draft(name, kind, parent)
        p = self._drafts[parent]
        p.children.append(sid)
        if p.kind == "xor" and (initial or p.initial is None):
            p.initial = sid
        return sid

    def basic(self, parent: int, name: str, initial: bool = False) -> int:
        return self._add_state(parent, name, "basic", initial)

    def xor(self, parent: int, name: str, initial: bool = False) -> int:
        return self._add_state(parent, name, "xor", initial)

    def and_(self, parent: int, name: str, initial: bool = False) -> int:
        return self._add_state(parent, name, "and", initial)

    def var(self, state: int, decl: str):
        name, vtype, init, comment = parse_vardecl(decl)
        self._drafts[state].variables.append(VarDecl(name, vtype, init, comment))

    def invariant(self, state: int, text: str):
        self._drafts[state].invariant = parse_expr(text)

    def cost_rate(self, state: int, rate: Union[str, int]):
        self._drafts[state].cost_rate = parse_rational(str(rate))

    def comment(self, state: int, text: str):
        self._drafts[state].comment = text

    # transitions -----------------------------------------------------------

    def trans(self, source: int, label: str, to: Optional[int] = None,
              body: Optional[BodySpec] = None, comment: Optional[str] = None,
              waypoints: Sequence[tuple[float, float]] = ()) -> int:
        if (to is None) == (body is None):
            raise ValueError("give exactly one of to= or body=")
        tid = self._alloc()
        spec = body if body is not None else _GotoSpec(to, waypoints=waypoints)
        self._transitions.append((tid, source, label, spec, comment))
        return tid

    def query(self, kind: str, target: int, attached_to: Optional[int] = None) -> int:
        qid = self._alloc()
        self._queries.append(Query(qid, kind, target, attached_to if attached_to is not None else self.root_id))
        return qid

    # assembly --------------------------------------------------------------

    def _boxes(self) -> dict[int, Rect]:
        sizes: dict[int, tuple[float, float]] = {}

        def size(sid: int) -> tuple[float, float]:
            d = self._drafts[sid]
            if not d.children:
                w, h = BASIC_W, BASIC_H
            else:
                ws, hs = zip(*(size(c) for c in d.children))
                w = PAD + sum(w_ + PAD for w_ in ws)
                h = TITLE + max(hs) + PAD
            extra = TITLE * (len(d.variables) + (1 if d.invariant is not None else 0))
            h += extra
            sizes[sid] = (w, h)
            return w, h

        size(self.root_id)
        boxes: dict[int, Rect] = {}

        def place(sid: int, x: float, y: float):
            w, h = sizes[sid]
            boxes[sid] = Rect(x, y, w, h)
            d = self._drafts[sid]
            cx = x + PAD
            extra = TITLE * (len(d.variables) + (1 if d.invariant is not None else 0))
            for c in d.children:
                cw, ch = sizes[c]
                place(c, cx, y + TITLE + extra)
                cx += cw + PAD

        place(self.root_id, 0, 0)
        return boxes

    def _tree(self, spec: BodySpec, boxes: dict[int, Rect], anchor: Point) -> TransitionTree:
        if isinstance(spec, int):
            spec = _GotoSpec(spec)
        if isinstance(spec, _GotoSpec):
            from .expr import parse_actions
            return Goto(
                spec.target,
                parse_actions(spec.actions),
                parse_rational(str(spec.cost)),
                tuple(Point(x, y) for x, y in spec.waypoints),
            )
        if isinstance(spec, _ProbSpec):
            node = self._alloc()
            pos = Point(*spec.pos) if spec.pos else anchor
            return Prob(node, pos, tuple(
                (parse_rational(p), self._tree(sub, boxes, Point(pos.x + 40, pos.y)))
                for p, sub in spec.branches
            ))
        node = self._alloc()
        pos = Point(*spec.pos) if spec.pos else anchor
        branches = tuple(
            (parse_expr(g), self._tree(sub, boxes, Point(pos.x + 40, pos.y)))
            for g, sub in spec.branches
        )
        els = self._tree(spec.els, boxes, Point(pos.x + 40, pos.y + 30)) if spec.els is not None else None
        return Cond(node, pos, branches, els)

    def build(self, check: bool = True) -> Chart:
        boxes = self._boxes()
        states = {}
        for sid, d in self._drafts.items():
            states[sid] = State(
                id=sid, name=d.name, kind=d.kind, children=tuple(d.children),
                initial=d.initial if d.kind == "xor" else None,
                variables=tuple(d.variables), invariant=d.invariant,
                cost_rate=d.cost_rate, comment=d.comment, box=boxes[sid],
            )
        transitions = {}
        for tid, source, label_text, spec, comment in self._transitions:
            label = parse_label(label_text)
            src_box = boxes[source]
            anchor = Point(src_box.x2 + 30, src_box.center.y)
            body = self._tree(spec, boxes, anchor)
            if isinstance(body, Goto) and (label.actions or label.cost is not None):
                body = Goto(body.target, label.actions,
                            label.cost if label.cost is not None else Fraction(0),
                            body.waypoints)
            transitions[tid] = Transition(tid, source, label.trigger, label.guard, body, comment)
        chart = Chart(
            name=self.name, root=self.root_id, states=states,
            transitions=transitions, queries=tuple(self._queries), next_id=self._next,
        )
        if check:
            problems = [d for d in validate(chart) if d.severity == "error"]
            if problems:
                raise ValueError("invalid chart: " + "; ".join(str(p) for p in problems))
        return chart
