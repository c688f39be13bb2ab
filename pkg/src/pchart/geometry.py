"""Points, rectangles, and the polyline helpers used by layout and rendering.

Coordinates are abstract canvas units, x growing right and y growing down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __add__(self, other: "Point") -> "Point":
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point") -> "Point":
        return Point(self.x - other.x, self.y - other.y)

    def scale(self, k: float) -> "Point":
        return Point(self.x * k, self.y * k)

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> Point:
        return Point(self.x + self.w / 2, self.y + self.h / 2)

    def contains_point(self, p: Point) -> bool:
        return self.x <= p.x <= self.x2 and self.y <= p.y <= self.y2

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )

    def overlaps(self, other: "Rect") -> bool:
        """Open-interior overlap: touching edges do not count."""
        return (
            self.x < other.x2
            and other.x < self.x2
            and self.y < other.y2
            and other.y < self.y2
        )

    def moved_to(self, x: float, y: float) -> "Rect":
        return Rect(x, y, self.w, self.h)

    def clamp_point(self, p: Point) -> Point:
        """The nearest point of the (closed) rectangle to p."""
        return Point(min(max(p.x, self.x), self.x2), min(max(p.y, self.y), self.y2))


def seg_intersects_rect(a: Point, b: Point, r: Rect) -> bool:
    """True when segment a-b meets the open interior of r.

    Liang-Barsky clipping; a segment that only grazes the boundary is not
    a collision.
    """
    dx = b.x - a.x
    dy = b.y - a.y
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, a.x - r.x),
        (dx, r.x2 - a.x),
        (-dy, a.y - r.y),
        (dy, r.y2 - a.y),
    ):
        if p == 0:
            if q < 0:
                return False
            continue
        t = q / p
        if p < 0:
            if t > t1:
                return False
            t0 = max(t0, t)
        else:
            if t < t0:
                return False
            t1 = min(t1, t)
    if t0 > t1:
        return False
    # Clipped segment with positive length, or a touching point strictly
    # inside: treat zero-length grazes along the border as misses.
    mx = a.x + dx * (t0 + t1) / 2
    my = a.y + dy * (t0 + t1) / 2
    return r.x < mx < r.x2 and r.y < my < r.y2


def polyline_intersects_rect(points: list[Point], r: Rect) -> bool:
    return any(seg_intersects_rect(points[i], points[i + 1], r) for i in range(len(points) - 1))


def segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Proper or touching intersection of two closed segments."""

    def orient(a: Point, b: Point, c: Point) -> float:
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)

    def on_seg(a: Point, b: Point, c: Point) -> bool:
        return (
            min(a.x, b.x) <= c.x <= max(a.x, b.x)
            and min(a.y, b.y) <= c.y <= max(a.y, b.y)
        )

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


def polyline_length(points: list[Point]) -> float:
    return sum(points[i].dist(points[i + 1]) for i in range(len(points) - 1))


def point_along(points: list[Point], t: float) -> tuple[Point, Point]:
    """Point at arclength fraction t in [0,1], plus the unit direction there.

    Direction is the local segment direction; at vertices the incoming
    segment wins.
    """
    total = polyline_length(points)
    if total == 0:
        raise ValueError("zero-length polyline")
    want = t * total
    run = 0.0
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        seg = a.dist(b)
        if seg == 0:
            continue
        if run + seg >= want or i == len(points) - 2:
            u = min(max((want - run) / seg, 0.0), 1.0)
            p = Point(a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u)
            d = Point((b.x - a.x) / seg, (b.y - a.y) / seg)
            return p, d
        run += seg
    raise ValueError("unreachable")


def polyline_centroid(points: list[Point]) -> Point:
    """Arclength-weighted centroid of a polyline."""
    total = polyline_length(points)
    if total == 0:
        return points[0]
    cx = cy = 0.0
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        seg = a.dist(b)
        cx += (a.x + b.x) / 2 * seg
        cy += (a.y + b.y) / 2 * seg
    return Point(cx / total, cy / total)


def nearest_point_on_polyline(points: list[Point], p: Point) -> Point:
    """Closest point of the polyline to p."""
    best = points[0]
    best_d = p.dist(best)
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        vx, vy = b.x - a.x, b.y - a.y
        L2 = vx * vx + vy * vy
        if L2 == 0:
            cand = a
        else:
            u = ((p.x - a.x) * vx + (p.y - a.y) * vy) / L2
            u = min(max(u, 0.0), 1.0)
            cand = Point(a.x + vx * u, a.y + vy * u)
        d = p.dist(cand)
        if d < best_d:
            best, best_d = cand, d
    return best


def rect_border_point(r: Rect, toward: Point) -> Point:
    """Where the ray from the rect center toward `toward` leaves the rect."""
    c = r.center
    dx = toward.x - c.x
    dy = toward.y - c.y
    if dx == 0 and dy == 0:
        return Point(r.x2, c.y)
    tx = abs((r.w / 2) / dx) if dx != 0 else math.inf
    ty = abs((r.h / 2) / dy) if dy != 0 else math.inf
    t = min(tx, ty)
    return Point(c.x + dx * t, c.y + dy * t)
