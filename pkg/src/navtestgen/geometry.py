"""Planar distance and overlap queries between oriented boxes and circles.

Every shape is a closed region. Distances are Euclidean gaps between regions
and clamp to exactly 0.0 when the regions touch or overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)):
            raise ValueError(f"non-finite pose {self.x}, {self.y}, {self.yaw}")
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle of size ``length`` (along ``center.yaw``) by ``width``."""

    center: Pose2D
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"box dimensions must be positive, got {self.length} x {self.width}")

    def corners(self) -> list[tuple[float, float]]:
        c, s = math.cos(self.center.yaw), math.sin(self.center.yaw)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        cx, cy = self.center.x, self.center.y
        return [
            (cx + dx * c - dy * s, cy + dx * s + dy * c)
            for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
        ]


@dataclass(frozen=True)
class CircleShape:
    center: tuple[float, float]
    diameter: float

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError(f"circle diameter must be positive, got {self.diameter}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter


ObstacleShape = Union[OrientedBox, CircleShape]


def footprint_at(pose: Pose2D, length: float, width: float) -> OrientedBox:
    return OrientedBox(pose, length, width)


# Raw-float kernels. The simulator calls these directly in its inner loop.

def _point_box(px, py, bx, by, c, s, hl, hw):
    dx, dy = px - bx, py - by
    lx = abs(dx * c + dy * s) - hl
    ly = abs(-dx * s + dy * c) - hw
    if lx <= 0.0:
        return ly if ly > 0.0 else 0.0
    if ly <= 0.0:
        return lx
    return math.hypot(lx, ly)


def _box_corners(bx, by, c, s, hl, hw):
    ax, ay = hl * c, hl * s
    wx, wy = -hw * s, hw * c
    return (
        (bx + ax + wx, by + ay + wy),
        (bx - ax + wx, by - ay + wy),
        (bx - ax - wx, by - ay - wy),
        (bx + ax - wx, by + ay - wy),
    )


def _box_box(ax, ay, ac, as_, ahl, ahw, bx, by, bc, bs, bhl, bhw):
    dx, dy = bx - ax, by - ay
    # Bounding-circle reject would still need the exact value, so go straight to SAT.
    separated = False
    for ux, uy in ((ac, as_), (-as_, ac), (bc, bs), (-bs, bc)):
        ra = ahl * abs(ac * ux + as_ * uy) + ahw * abs(-as_ * ux + ac * uy)
        rb = bhl * abs(bc * ux + bs * uy) + bhw * abs(-bs * ux + bc * uy)
        if abs(dx * ux + dy * uy) > ra + rb:
            separated = True
            break
    if not separated:
        return 0.0
    best = math.inf
    for px, py in _box_corners(ax, ay, ac, as_, ahl, ahw):
        d = _point_box(px, py, bx, by, bc, bs, bhl, bhw)
        if d < best:
            best = d
    for px, py in _box_corners(bx, by, bc, bs, bhl, bhw):
        d = _point_box(px, py, ax, ay, ac, as_, ahl, ahw)
        if d < best:
            best = d
    return best


def _box_params(b: OrientedBox):
    yaw = b.center.yaw
    return (b.center.x, b.center.y, math.cos(yaw), math.sin(yaw), 0.5 * b.length, 0.5 * b.width)


def box_box_distance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between two closed boxes; 0.0 if they touch or overlap."""
    return _box_box(*_box_params(a), *_box_params(b))


def box_circle_distance(a: OrientedBox, c: CircleShape) -> float:
    d = _point_box(c.center[0], c.center[1], *_box_params(a)) - c.radius
    return d if d > 0.0 else 0.0


def circle_circle_distance(a: CircleShape, b: CircleShape) -> float:
    d = math.hypot(b.center[0] - a.center[0], b.center[1] - a.center[1]) - (a.radius + b.radius)
    return d if d > 0.0 else 0.0


def shape_distance(a: ObstacleShape, b: ObstacleShape) -> float:
    """Distance between any two shapes, dispatching on their types."""
    if isinstance(a, OrientedBox):
        if isinstance(b, OrientedBox):
            return box_box_distance(a, b)
        return box_circle_distance(a, b)
    if isinstance(b, OrientedBox):
        return box_circle_distance(b, a)
    return circle_circle_distance(a, b)


def obstacle_gap(a: ObstacleShape, b: ObstacleShape) -> float:
    """Free space between two obstacles, as reported per test."""
    return shape_distance(a, b)


def point_shape_distance(x: float, y: float, shape: ObstacleShape) -> float:
    if isinstance(shape, OrientedBox):
        return _point_box(x, y, *_box_params(shape))
    d = math.hypot(x - shape.center[0], y - shape.center[1]) - shape.radius
    return d if d > 0.0 else 0.0


def closest_point(x: float, y: float, shape: ObstacleShape) -> tuple[float, float]:
    """Point of ``shape`` nearest to (x, y); (x, y) itself when inside."""
    if isinstance(shape, OrientedBox):
        bx, by, c, s, hl, hw = _box_params(shape)
        dx, dy = x - bx, y - by
        lx = min(max(dx * c + dy * s, -hl), hl)
        ly = min(max(-dx * s + dy * c, -hw), hw)
        return (bx + lx * c - ly * s, by + lx * s + ly * c)
    cx, cy = shape.center
    d = math.hypot(x - cx, y - cy)
    r = shape.radius
    if d <= r:
        return (x, y)
    return (cx + (x - cx) * r / d, cy + (y - cy) * r / d)


def contains_point(shape: ObstacleShape, x: float, y: float) -> bool:
    return point_shape_distance(x, y, shape) == 0.0


def bounding_radius(shape: ObstacleShape) -> float:
    if isinstance(shape, OrientedBox):
        return 0.5 * math.hypot(shape.length, shape.width)
    return shape.radius


def shape_center(shape: ObstacleShape) -> tuple[float, float]:
    if isinstance(shape, OrientedBox):
        return (shape.center.x, shape.center.y)
    return shape.center


def rigid_transform(shape: ObstacleShape, dx: float, dy: float, dtheta: float,
                    pivot: tuple[float, float] = (0.0, 0.0)) -> ObstacleShape:
    """Rotate ``shape`` by ``dtheta`` about ``pivot``, then translate by (dx, dy)."""
    c, s = math.cos(dtheta), math.sin(dtheta)
    px, py = pivot
    cx, cy = shape_center(shape)
    rx = px + (cx - px) * c - (cy - py) * s + dx
    ry = py + (cx - px) * s + (cy - py) * c + dy
    if isinstance(shape, OrientedBox):
        return OrientedBox(Pose2D(rx, ry, shape.center.yaw + dtheta), shape.length, shape.width)
    return CircleShape((rx, ry), shape.diameter)


class FootprintDistance:
    """Precomputed obstacle parameters for repeated footprint-to-obstacle queries."""

    def __init__(self, shapes, length: float, width: float):
        self.shapes = list(shapes)
        self.length, self.width = length, width
        self.hl = 0.5 * length
        self.hw = 0.5 * width
        self.radius = 0.5 * math.hypot(length, width)
        self.boxes = []
        self.circles = []
        for shape in self.shapes:
            if isinstance(shape, OrientedBox):
                self.boxes.append(_box_params(shape))
            else:
                self.circles.append((shape.center[0], shape.center[1], shape.radius))

    def __len__(self):
        return len(self.boxes) + len(self.circles)

    def each(self, x: float, y: float, yaw: float) -> list[float]:
        """Distance from the footprint at (x, y, yaw) to every obstacle, in input order."""
        fp = OrientedBox(Pose2D(x, y, yaw), self.length, self.width)
        return [shape_distance(fp, shape) for shape in self.shapes]

    def near(self, x: float, y: float, yaw: float, reach: float) -> "FootprintDistance | None":
        """Restriction to obstacles within ``reach`` of the footprint, or None."""
        close = [s for s, d in zip(self.shapes, self.each(x, y, yaw)) if d <= reach]
        if not close:
            return None
        if len(close) == len(self.shapes):
            return self
        return FootprintDistance(close, self.length, self.width)

    def min(self, x: float, y: float, yaw: float) -> float:
        c, s = math.cos(yaw), math.sin(yaw)
        hl, hw = self.hl, self.hw
        best = math.inf
        for b in self.boxes:
            d = _box_box(x, y, c, s, hl, hw, *b)
            if d < best:
                best = d
        for cx, cy, r in self.circles:
            d = _point_box(cx, cy, x, y, c, s, hl, hw) - r
            if d < best:
                best = d
        return best if best > 0.0 else 0.0
