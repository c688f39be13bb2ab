"""Display lists and SVG rendering.

A display list is the language-neutral drawing form consumed by the
browser editor and the SVG writer: ordered primitives, back to front,
each carrying the model id it visualizes so views can hit-test without
duplicating geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union
from xml.sax.saxutils import escape, quoteattr

from .errors import MissingLayout
from .expr import pretty
from .geometry import Point, Rect
from .layout import LayoutConfig, LayoutResult, DEFAULT_CONFIG, layout_chart
from .model import Chart, StateId, dfs_order


@dataclass(frozen=True)
class BoxItem:
    rect: Rect
    corner_radius: float
    kind: str  # "basic" | "xor" | "and"
    state_id: StateId


@dataclass(frozen=True)
class SeparatorItem:
    a: Point
    b: Point
    owner: StateId


@dataclass(frozen=True)
class PathItem:
    points: tuple[Point, ...]
    arrow: bool
    connection_id: str


@dataclass(frozen=True)
class TextItem:
    rect: Rect
    text: str
    object_id: str
    role: str  # "name" | "label" | "invariant" | "variable"


@dataclass(frozen=True)
class MarkerItem:
    at: Point
    kind: str  # "prob" | "cond"
    pseudo_id: int


@dataclass(frozen=True)
class LeaderItem:
    a: Point
    b: Point
    connection_id: str


DisplayItem = Union[BoxItem, SeparatorItem, PathItem, TextItem, MarkerItem, LeaderItem]


@dataclass(frozen=True)
class DisplayList:
    items: tuple[DisplayItem, ...]
    size: tuple[float, float]


@dataclass(frozen=True)
class RenderStyle:
    corner_radius: float = 8.0
    font_size: float = 11.0
    marker_radius: float = 6.0
    stroke: str = "#1e293b"
    box_fill: str = "#ffffff"
    label_fill: str = "#334155"
    separator_dash: str = "6 4"
    leader_dash: str = "2 3"


STYLE = RenderStyle()


def build_display_list(chart: Chart, layout: Optional[LayoutResult] = None,
                       config: LayoutConfig = DEFAULT_CONFIG) -> DisplayList:
    """Deterministic drawing order: boxes outside-in, separators, paths,
    markers, texts, leader lines."""
    if layout is None:
        layout = layout_chart(chart, config)

    for sid in dfs_order(chart):
        if chart.states[sid].kind == "and" and sid not in layout.separators:
            raise MissingLayout(sid)
    placed = set(layout.placements)
    for conn in layout.scene.connections:
        if conn.text and conn.id not in placed:
            raise MissingLayout(conn.id)

    items: list[DisplayItem] = []
    texts: list[TextItem] = []

    for sid in dfs_order(chart):
        st = chart.states[sid]
        items.append(BoxItem(st.box, STYLE.corner_radius, st.kind, sid))
        name_rect = Rect(st.box.x + 6, st.box.y + 4, 7.0 * len(st.name), 14)
        texts.append(TextItem(name_rect, st.name, f"name-{sid}", "name"))
        line = 0
        for decl in st.variables:
            text = f"{decl.name}: {decl.vtype} = {pretty(decl.init)}"
            texts.append(TextItem(
                Rect(st.box.x + 6, st.box.y + 20 + 14 * line, 7.0 * len(text), 14),
                text, f"var-{sid}-{decl.name}", "variable"))
            line += 1
        if st.invariant is not None:
            text = pretty(st.invariant)
            texts.append(TextItem(
                Rect(st.box.x + 6, st.box.y2 - 18, 7.0 * len(text), 14),
                text, f"inv-{sid}", "invariant"))

    for sid in sorted(layout.separators):
        for sep in layout.separators[sid]:
            a, b = sep.endpoints()
            items.append(SeparatorItem(a, b, sid))

    for conn in layout.scene.connections:
        items.append(PathItem(conn.path, conn.arrow, conn.id))

    for marker in layout.scene.markers:
        items.append(MarkerItem(marker.at, marker.kind, marker.id))

    items.extend(texts)

    for cid in sorted(layout.placements):
        p = layout.placements[cid]
        conn = next(c for c in layout.scene.connections if c.id == cid)
        items.append(TextItem(p.rect, conn.text, f"lbl-{cid}", "label"))
        if p.leader is not None:
            items.append(LeaderItem(p.leader[0], p.leader[1], cid))

    root_box = chart.states[chart.root].box
    size = (root_box.x2 + 20, root_box.y2 + 20)
    return DisplayList(tuple(items), size)


# ---------------------------------------------------------------------------
# JSON form (the editor protocol payload)


def display_list_to_json(dl: DisplayList) -> dict:
    items = []
    for it in dl.items:
        if isinstance(it, BoxItem):
            items.append({"kind": "box", "rect": _rect(it.rect), "radius": it.corner_radius,
                          "stateKind": it.kind, "id": f"state-{it.state_id}",
                          "stateId": it.state_id})
        elif isinstance(it, SeparatorItem):
            items.append({"kind": "separator", "from": [it.a.x, it.a.y],
                          "to": [it.b.x, it.b.y], "owner": it.owner})
        elif isinstance(it, PathItem):
            items.append({"kind": "path", "points": [[p.x, p.y] for p in it.points],
                          "arrow": it.arrow, "id": f"conn-{it.connection_id}",
                          "connectionId": it.connection_id})
        elif isinstance(it, TextItem):
            items.append({"kind": "text", "rect": _rect(it.rect), "text": it.text,
                          "id": it.object_id, "role": it.role})
        elif isinstance(it, MarkerItem):
            items.append({"kind": "marker", "at": [it.at.x, it.at.y],
                          "shape": it.kind, "id": f"pseudo-{it.pseudo_id}",
                          "pseudoId": it.pseudo_id})
        else:
            items.append({"kind": "leader", "from": [it.a.x, it.a.y],
                          "to": [it.b.x, it.b.y], "connectionId": it.connection_id})
    return {"items": items, "size": [dl.size[0], dl.size[1]]}


def _rect(r: Rect) -> list[float]:
    return [r.x, r.y, r.w, r.h]


# ---------------------------------------------------------------------------
# SVG


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_svg(dl: DisplayList, size: Optional[tuple[float, float]] = None) -> str:
    """Standalone SVG 1.1 document; stable attribute order, byte-deterministic."""
    w, h = size or dl.size
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
        f'viewBox="0 0 {_fmt(w)} {_fmt(h)}" font-family="sans-serif" '
        f'font-size="{_fmt(STYLE.font_size)}">',
        "<defs>",
        '<marker id="arrowhead" markerWidth="10" markerHeight="8" refX="9" refY="4" orient="auto">',
        f'<path d="M 0 0 L 10 4 L 0 8 z" fill="{STYLE.stroke}"/>',
        "</marker>",
        "</defs>",
        '<g fill="none" stroke-width="1.2">',
    ]
    for it in dl.items:
        if isinstance(it, BoxItem):
            out.append(
                f'<rect id="state-{it.state_id}" x="{_fmt(it.rect.x)}" y="{_fmt(it.rect.y)}" '
                f'width="{_fmt(it.rect.w)}" height="{_fmt(it.rect.h)}" rx="{_fmt(it.corner_radius)}" '
                f'fill="{STYLE.box_fill}" fill-opacity="0.85" stroke="{STYLE.stroke}"/>'
            )
        elif isinstance(it, SeparatorItem):
            out.append(
                f'<line x1="{_fmt(it.a.x)}" y1="{_fmt(it.a.y)}" x2="{_fmt(it.b.x)}" '
                f'y2="{_fmt(it.b.y)}" stroke="{STYLE.stroke}" '
                f'stroke-dasharray="{STYLE.separator_dash}"/>'
            )
        elif isinstance(it, PathItem):
            d = "M " + " L ".join(f"{_fmt(p.x)} {_fmt(p.y)}" for p in it.points)
            arrow = ' marker-end="url(#arrowhead)"' if it.arrow else ""
            out.append(
                f'<path id="conn-{it.connection_id}" d="{d}" stroke="{STYLE.stroke}"{arrow}/>'
            )
        elif isinstance(it, MarkerItem):
            if it.kind == "prob":
                out.append(
                    f'<circle id="pseudo-{it.pseudo_id}" cx="{_fmt(it.at.x)}" cy="{_fmt(it.at.y)}" '
                    f'r="{_fmt(STYLE.marker_radius)}" fill="{STYLE.stroke}"/>'
                )
            else:
                r = STYLE.marker_radius
                d = (f"M {_fmt(it.at.x)} {_fmt(it.at.y - r)} L {_fmt(it.at.x + r)} {_fmt(it.at.y)} "
                     f"L {_fmt(it.at.x)} {_fmt(it.at.y + r)} L {_fmt(it.at.x - r)} {_fmt(it.at.y)} z")
                out.append(
                    f'<path id="pseudo-{it.pseudo_id}" d="{d}" fill="{STYLE.box_fill}" '
                    f'stroke="{STYLE.stroke}"/>'
                )
        elif isinstance(it, TextItem):
            weight = ' font-weight="bold"' if it.role == "name" else ""
            style = ' font-style="italic"' if it.role == "invariant" else ""
            out.append(
                f'<text id={quoteattr(it.object_id)} x="{_fmt(it.rect.x)}" '
                f'y="{_fmt(it.rect.y + it.rect.h - 3)}" fill="{STYLE.label_fill}" '
                f'stroke="none"{weight}{style}>{escape(it.text)}</text>'
            )
        else:
            assert isinstance(it, LeaderItem)
            out.append(
                f'<line x1="{_fmt(it.a.x)}" y1="{_fmt(it.a.y)}" x2="{_fmt(it.b.x)}" '
                f'y2="{_fmt(it.b.y)}" stroke="{STYLE.label_fill}" '
                f'stroke-dasharray="{STYLE.leader_dash}"/>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_chart_svg(chart: Chart, config: LayoutConfig = DEFAULT_CONFIG) -> str:
    return render_svg(build_display_list(chart, layout_chart(chart, config)))
