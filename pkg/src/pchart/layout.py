"""Diagram layout: concurrent-state separators and connection-label placement.

Separators: an and state's children are split recursively. On the current
axis every maximal uncovered interval strictly between boxes yields one
dashed separator at the interval midpoint, spanning the group's full
perpendicular extent; the resulting subgroups are split again on the
alternate axis until groups are singletons or gap-free. The starting axis
follows the group's aspect ratio (wider than tall splits vertically first).

Labels: k anchor points along each connection path, offset to both sides,
give 2k candidate rectangles. Candidates colliding with chart objects are
dropped, except boxes of states the connection's source is nested in,
which sit behind the label. Greedy assignment in decreasing path length
minimizes a force cost (pull toward the path centroid, pushback from
other labels), followed by one local improvement sweep. High-cost or
nonviable choices get a dotted leader line back to their path; manual
rectangles are honored untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import DegeneratePath, InvalidGeometry
from .expr import TransitionLabel, format_actions, format_label, format_rational, pretty
from .geometry import (
    Point,
    Rect,
    nearest_point_on_polyline,
    point_along,
    polyline_centroid,
    polyline_intersects_rect,
    polyline_length,
    rect_border_point,
)
from .model import Chart, Cond, Goto, Prob, StateId, dfs_order, parent_map, path_from_root


@dataclass(frozen=True)
class LayoutConfig:
    anchor_samples: int = 7
    gap: float = 4.0
    centroid_weight: float = 1.0
    repulsion_weight: float = 4.0
    repulsion_radius_factor: float = 2.0  # times max(label w, h)
    leader_distance_factor: float = 3.0  # times label height, squared into cost
    char_width: float = 7.0
    label_height: float = 14.0
    label_pad: float = 6.0
    marker_radius: float = 6.0

    def label_size(self, text: str) -> tuple[float, float]:
        return (self.char_width * len(text) + self.label_pad, self.label_height)

    def leader_threshold(self, label_h: float) -> float:
        return self.centroid_weight * (self.leader_distance_factor * label_h) ** 2


DEFAULT_CONFIG = LayoutConfig()


# ---------------------------------------------------------------------------
# Separators (and-state child splitting)


@dataclass(frozen=True)
class Separator:
    axis: str  # "vertical" | "horizontal"
    position: float
    span: tuple[float, float]
    owner: Optional[StateId] = None

    def endpoints(self) -> tuple[Point, Point]:
        if self.axis == "vertical":
            return Point(self.position, self.span[0]), Point(self.position, self.span[1])
        return Point(self.span[0], self.position), Point(self.span[1], self.position)


def _bbox(boxes: list[Rect]) -> Rect:
    x1 = min(b.x for b in boxes)
    y1 = min(b.y for b in boxes)
    x2 = max(b.x2 for b in boxes)
    y2 = max(b.y2 for b in boxes)
    return Rect(x1, y1, x2 - x1, y2 - y1)


def _gaps(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Maximal uncovered intervals strictly between the given intervals."""
    intervals = sorted(intervals)
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo > merged[-1][1]:
            merged.append([lo, hi])
        else:
            merged[-1][1] = max(merged[-1][1], hi)
    return [(merged[i][1], merged[i + 1][0]) for i in range(len(merged) - 1)]


def split_and_children(boxes: list[Rect], outer: Rect,
                       owner: Optional[StateId] = None) -> list[Separator]:
    """Dashed separators fully dividing a group of sibling boxes."""
    if len(boxes) < 2:
        return []
    for i, a in enumerate(boxes):
        if not outer.contains_rect(a):
            raise InvalidGeometry(f"box {i} is not contained in the group frame")
        for b in boxes[i + 1:]:
            if a.overlaps(b):
                raise InvalidGeometry("child boxes overlap")

    out: list[Separator] = []

    def split(group: list[Rect], axis: str):
        if len(group) < 2:
            return
        bb = _bbox(group)
        for attempt_axis in (axis, _other(axis)):
            if attempt_axis == "vertical":
                gaps = _gaps([(b.x, b.x2) for b in group])
                span = (bb.y, bb.y2)
            else:
                gaps = _gaps([(b.y, b.y2) for b in group])
                span = (bb.x, bb.x2)
            if gaps:
                for lo, hi in gaps:
                    out.append(Separator(attempt_axis, (lo + hi) / 2, span, owner))
                cuts = [lo for lo, hi in gaps]
                groups: dict[int, list[Rect]] = {}
                for b in group:
                    coord = b.x if attempt_axis == "vertical" else b.y
                    slot = sum(1 for c in cuts if coord >= c)
                    groups.setdefault(slot, []).append(b)
                for slot in sorted(groups):
                    split(groups[slot], _other(attempt_axis))
                return

    bb = _bbox(boxes)
    start = "vertical" if bb.w > bb.h else "horizontal"
    split(list(boxes), start)
    return out


def _other(axis: str) -> str:
    return "horizontal" if axis == "vertical" else "vertical"


# ---------------------------------------------------------------------------
# Label candidates


@dataclass(frozen=True)
class LabelCandidate:
    connection_id: str
    rect: Rect
    anchor_param: float
    side: str  # "left" | "right"
    cost: float = 0.0
    viable: bool = True


def label_candidates(path: list[Point], label_size: tuple[float, float],
                     k: int = DEFAULT_CONFIG.anchor_samples,
                     gap: float = DEFAULT_CONFIG.gap,
                     connection_id: str = "") -> list[LabelCandidate]:
    """2k candidate rectangles: k anchors evenly spaced by arclength,
    offset perpendicular to the local direction on both sides so the
    label clears the path."""
    if len(path) < 2 or polyline_length(path) == 0:
        raise DegeneratePath("connection path has no extent")
    if k < 3:
        raise ValueError("need at least 3 anchor samples")
    w, h = label_size
    out = []
    for i in range(k):
        t = i / (k - 1)
        pt, d = point_along(path, t)
        for side, normal in (("left", Point(d.y, -d.x)), ("right", Point(-d.y, d.x))):
            support = abs(normal.x) * w / 2 + abs(normal.y) * h / 2
            center = pt + normal.scale(gap + support)
            rect = Rect(center.x - w / 2, center.y - h / 2, w, h)
            out.append(LabelCandidate(connection_id, rect, t, side))
    return out


# ---------------------------------------------------------------------------
# Scene: the geometry a chart exposes to collision filtering


@dataclass(frozen=True)
class Connection:
    id: str
    trans_id: int
    source_state: StateId
    path: tuple[Point, ...]
    text: str
    manual_rect: Optional[Rect] = None
    arrow: bool = True  # false for segments ending at a pseudo node


@dataclass(frozen=True)
class Marker:
    id: int
    kind: str  # "prob" | "cond"
    at: Point


@dataclass(frozen=True)
class Scene:
    boxes: dict[StateId, Rect]
    ancestors: dict[StateId, frozenset[StateId]]
    connections: tuple[Connection, ...]
    markers: tuple[Marker, ...]


def filter_collisions(cands: list[LabelCandidate], scene: Scene,
                      source_state: StateId,
                      fixed: list[Rect] = (),
                      config: LayoutConfig = DEFAULT_CONFIG) -> list[LabelCandidate]:
    """Drop candidates that hit boxes (except the source's ancestors,
    which are behind the label), paths, markers, or already-placed labels.
    When nothing survives, the full set returns flagged nonviable."""
    behind = scene.ancestors.get(source_state, frozenset())
    kept = []
    for cand in cands:
        r = cand.rect
        hit = False
        for sid, box in scene.boxes.items():
            if sid in behind:
                continue
            if r.overlaps(box):
                hit = True
                break
        if not hit:
            for conn in scene.connections:
                if polyline_intersects_rect(list(conn.path), r):
                    hit = True
                    break
        if not hit:
            m = config.marker_radius
            for marker in scene.markers:
                mb = Rect(marker.at.x - m, marker.at.y - m, 2 * m, 2 * m)
                if r.overlaps(mb):
                    hit = True
                    break
        if not hit:
            for fr in fixed:
                if r.overlaps(fr):
                    hit = True
                    break
        if not hit:
            kept.append(cand)
    if not kept:
        return [replace(c, viable=False) for c in cands]
    return kept


# ---------------------------------------------------------------------------
# Placement


@dataclass(frozen=True)
class LabelPlacement:
    connection_id: str
    rect: Rect
    leader: Optional[tuple[Point, Point]] = None
    manual: bool = False
    cost: float = 0.0
    viable: bool = True


def _pair_penalty(a: Point, b: Point, radius: float) -> float:
    d = a.dist(b)
    return max(0.0, radius - d) ** 2


def _candidate_cost(center: Point, centroid: Point, others: list[tuple[Point, float]],
                    radius: float, config: LayoutConfig) -> float:
    """Pull toward the centroid, pushback from placed labels. The pair
    radius is symmetric (max of both labels') so a local re-choice changes
    the global objective by exactly its local delta."""
    pull = config.centroid_weight * center.dist(centroid) ** 2
    push = config.repulsion_weight * sum(
        _pair_penalty(center, o, max(radius, r)) for o, r in others
    )
    return pull + push


def total_cost(placements: dict[str, LabelPlacement], centroids: dict[str, Point],
               radii: dict[str, float], config: LayoutConfig = DEFAULT_CONFIG) -> float:
    """Global objective: centroid pull per label plus each repulsion pair once."""
    ids = sorted(placements)
    total = 0.0
    for cid in ids:
        total += config.centroid_weight * placements[cid].rect.center.dist(centroids[cid]) ** 2
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            radius = max(radii[a], radii[b])
            total += config.repulsion_weight * _pair_penalty(
                placements[a].rect.center, placements[b].rect.center, radius
            )
    return total


def place_labels(scene: Scene, config: LayoutConfig = DEFAULT_CONFIG,
                 improve: bool = True) -> dict[str, LabelPlacement]:
    """Greedy placement in decreasing path length plus one improvement sweep."""
    conns = [c for c in scene.connections if c.text]
    order = sorted(conns, key=lambda c: (-polyline_length(list(c.path)), c.id))

    centroids = {c.id: polyline_centroid(list(c.path)) for c in conns}
    sizes = {c.id: config.label_size(c.text) for c in conns}
    radii = {c.id: config.repulsion_radius_factor * max(sizes[c.id]) for c in conns}

    candidates: dict[str, list[LabelCandidate]] = {}
    placements: dict[str, LabelPlacement] = {}

    for c in order:
        if c.manual_rect is not None:
            placements[c.id] = LabelPlacement(c.id, c.manual_rect, manual=True)
            continue
        cands = label_candidates(list(c.path), sizes[c.id], config.anchor_samples,
                                 config.gap, c.id)
        fixed = [p.rect for p in placements.values()]
        candidates[c.id] = filter_collisions(cands, scene, c.source_state, fixed, config)

        placements[c.id] = _choose(c.id, candidates[c.id], placements, centroids,
                                   radii, config)

    # one local improvement sweep with the others fixed
    if improve:
        for c in order:
            if placements[c.id].manual or c.id not in candidates:
                continue
            placements[c.id] = _choose(c.id, candidates[c.id], placements, centroids,
                                       radii, config, exclude=c.id)

    # manual placements get leaders by the same cost rule, never moved
    for c in conns:
        p = placements[c.id]
        others = [(q.rect.center, radii.get(qid, 0.0))
                  for qid, q in placements.items() if qid != c.id]
        cost = _candidate_cost(p.rect.center, centroids[c.id], others, radii[c.id], config)
        threshold = config.leader_threshold(sizes[c.id][1])
        needs_leader = cost > threshold or not p.viable
        leader = None
        if needs_leader:
            anchor = nearest_point_on_polyline(list(c.path), p.rect.center)
            leader = (anchor, p.rect.clamp_point(anchor))
        placements[c.id] = replace(p, leader=leader, cost=cost)
    return placements


def _choose(cid: str, cands: list[LabelCandidate], placements: dict[str, LabelPlacement],
            centroids: dict[str, Point], radii: dict[str, float], config: LayoutConfig,
            exclude: Optional[str] = None) -> LabelPlacement:
    others = [(p.rect.center, radii.get(qid, 0.0))
              for qid, p in placements.items() if qid != exclude]
    best = None
    best_key = None
    for cand in cands:
        cost = _candidate_cost(cand.rect.center, centroids[cid], others, radii[cid], config)
        key = (cost, cand.side != "left", cand.anchor_param)
        if best_key is None or key < best_key:
            best_key = key
            best = replace(cand, cost=cost)
    return LabelPlacement(cid, best.rect, manual=False, cost=best.cost, viable=best.viable)


def dump_candidates(scene: Scene, config: LayoutConfig = DEFAULT_CONFIG) -> list[dict]:
    """Debug view: every candidate with its cost normalized to 0..1
    (darker meaning worse when visualized)."""
    placements = place_labels(scene, config)
    centroids = {c.id: polyline_centroid(list(c.path)) for c in scene.connections}
    radii = {c.id: config.repulsion_radius_factor * max(config.label_size(c.text))
             for c in scene.connections}
    rows = []
    for c in scene.connections:
        if not c.text or c.manual_rect is not None:
            continue
        cands = filter_collisions(
            label_candidates(list(c.path), config.label_size(c.text),
                             config.anchor_samples, config.gap, c.id),
            scene, c.source_state, [], config)
        others = [(p.rect.center, radii.get(qid, 0.0))
                  for qid, p in placements.items() if qid != c.id]
        costs = [
            _candidate_cost(cand.rect.center, centroids[c.id], others, radii[c.id], config)
            for cand in cands
        ]
        lo, hi = min(costs), max(costs)
        for cand, cost in zip(cands, costs):
            norm = 0.0 if hi == lo else (cost - lo) / (hi - lo)
            rows.append({
                "connection": c.id,
                "rect": [cand.rect.x, cand.rect.y, cand.rect.w, cand.rect.h],
                "cost": norm,
                "viable": cand.viable,
            })
    return rows


# ---------------------------------------------------------------------------
# Chart scene construction


def _branch_text(prefix: str, leaf: Goto) -> str:
    parts = [prefix] if prefix else []
    if leaf.actions:
        parts.append("/ " + format_actions(leaf.actions))
    if leaf.cost:
        parts.append(f"$ {format_rational(leaf.cost)}")
    return " ".join(p for p in parts if p)


def build_scene(chart: Chart, config: LayoutConfig = DEFAULT_CONFIG) -> Scene:
    """Connection paths, labels, and markers for a chart's geometry."""
    boxes = {sid: chart.states[sid].box for sid in chart.states}
    ancestors = {
        sid: frozenset(path_from_root(chart, sid)[:-1]) for sid in chart.states
    }

    connections: list[Connection] = []
    markers: list[Marker] = []

    def endpoint(sid: StateId, toward: Point) -> Point:
        return rect_border_point(chart.states[sid].box, toward)

    loop_count: dict[StateId, int] = {}

    for tid in sorted(chart.transitions):
        tr = chart.transitions[tid]
        seq = 0

        def next_id() -> str:
            nonlocal seq
            cid = f"{tid}:{seq}"
            seq += 1
            return cid

        def from_anchor(tree) -> Point:
            if isinstance(tree, Goto):
                first = tree.waypoints[0] if tree.waypoints else chart.states[tree.target].box.center
                return first
            return tree.pos

        def loop_path(sid: StateId) -> tuple[Point, ...]:
            """Self-loops bulge out of the right edge, stacked downward."""
            box = chart.states[sid].box
            slot = loop_count.get(sid, 0)
            loop_count[sid] = slot + 1
            y = box.y + 18 + slot * 26
            return (Point(box.x2, y), Point(box.x2 + 26, y),
                    Point(box.x2 + 26, y + 14), Point(box.x2, y + 14))

        def walk(tree, start: Point, text: str):
            if isinstance(tree, Goto):
                end = endpoint(tree.target, tree.waypoints[-1] if tree.waypoints else start)
                path = (start, *tree.waypoints, end)
                if polyline_length(list(path)) == 0:
                    path = loop_path(tree.target)
                connections.append(Connection(next_id(), tid, tr.source, path, text))
                return
            if isinstance(tree, Prob):
                markers.append(Marker(tree.node, "prob", tree.pos))
                connections.append(Connection(next_id(), tid, tr.source, (start, tree.pos),
                                              text, arrow=False))
                for p, sub in tree.branches:
                    walk(sub, tree.pos, _subtree_prefix(sub, format_rational(p)))
            else:
                markers.append(Marker(tree.node, "cond", tree.pos))
                connections.append(Connection(next_id(), tid, tr.source, (start, tree.pos),
                                              text, arrow=False))
                for g, sub in tree.branches:
                    walk(sub, tree.pos, _subtree_prefix(sub, f"[{pretty(g)}]"))
                if tree.else_branch is not None:
                    walk(tree.else_branch, tree.pos, _subtree_prefix(tree.else_branch, "else"))

        head = TransitionLabel(tr.trigger, tr.guard,
                               tr.body.actions if isinstance(tr.body, Goto) else (),
                               tr.body.cost if isinstance(tr.body, Goto) and tr.body.cost else None)
        src_anchor = endpoint(tr.source, from_anchor(tr.body))
        walk(tr.body, src_anchor, format_label(head))

    # manual label rectangles attach by connection id
    connections = [
        replace(c, manual_rect=chart.label_overrides.get(c.id)) for c in connections
    ]
    return Scene(boxes, ancestors, tuple(connections), tuple(markers))


def _subtree_prefix(tree, prefix: str) -> str:
    if isinstance(tree, Goto):
        return _branch_text(prefix, tree)
    return prefix


@dataclass(frozen=True)
class LayoutResult:
    scene: Scene
    separators: dict[StateId, tuple[Separator, ...]]
    placements: dict[str, LabelPlacement]


def layout_chart(chart: Chart, config: LayoutConfig = DEFAULT_CONFIG) -> LayoutResult:
    """Separators for every and state plus label placements for every
    connection."""
    scene = build_scene(chart, config)
    separators = {}
    for sid in dfs_order(chart):
        st = chart.states[sid]
        if st.kind == "and":
            child_boxes = [chart.states[c].box for c in st.children]
            separators[sid] = tuple(split_and_children(child_boxes, st.box, owner=sid))
    placements = place_labels(scene, config)
    return LayoutResult(scene, separators, placements)
