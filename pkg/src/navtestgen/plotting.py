"""Top-down SVG rendering of runs and report comparisons.

Output is plain text built with fixed-precision formatting so the same input
always yields the same bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from navtestgen.geometry import OrientedBox, bounding_radius, shape_center
from navtestgen.scenario import TestDefinition
from navtestgen.simulator import TrajectoryLog

PX_PER_M = 40.0
COLORS = {"Success": "#2e7d32", "SafetyStop": "#c62828", "Timeout": "#ef6c00",
          "Collision": "#6a1b9a", "Error": "#455a64"}


def _f(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _bounds(log: TrajectoryLog, test: TestDefinition, pad: float = 1.5):
    xs = [s.pose.x for s in log.samples] + [p.x for p in test.mission.polyline()]
    ys = [s.pose.y for s in log.samples] + [p.y for p in test.mission.polyline()]
    for o in test.obstacles:
        cx, cy = shape_center(o.shape)
        r = bounding_radius(o.shape)
        xs += [cx - r, cx + r]
        ys += [cy - r, cy + r]
    return min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad


def render_plot(log: TrajectoryLog, test: TestDefinition, outcome: str | None = None,
                min_distance: float | None = None, min_gap: float | None = None) -> str:
    """Top-down view: obstacles, the trajectory stroked at footprint width, start/goal
    markers, and distance/gap annotations.

    World coordinates are used inside a y-flipped group, so stroke widths are in
    meters. The gap annotation is omitted when it is undefined (fewer than two
    obstacles).
    """
    from navtestgen.testbench import classify_outcome, compute_metrics

    metrics = compute_metrics(log, test)
    if outcome is None:
        outcome = classify_outcome(log, test).value
    if min_distance is None:
        min_distance = metrics.min_obstacle_distance
    if min_gap is None:
        min_gap = metrics.min_obstacle_gap

    x0, y0, x1, y1 = _bounds(log, test)
    w, h = x1 - x0, y1 - y0
    header_h = 1.2
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w * PX_PER_M)}" '
        f'height="{_f((h + header_h) * PX_PER_M)}" viewBox="{_f(x0)} {_f(-y1 - header_h)} {_f(w)} {_f(h + header_h)}">',
        f'<title>{escape(test.name)} / {escape(log.subject_id)}</title>',
        f'<rect x="{_f(x0)}" y="{_f(-y1 - header_h)}" width="{_f(w)}" height="{_f(h + header_h)}" fill="#ffffff"/>',
        '<g transform="scale(1,-1)">',
        '<g id="obstacles" fill="#78909c" stroke="#37474f" stroke-width="0.02">',
    ]
    for o in test.obstacles:
        s = o.shape
        if isinstance(s, OrientedBox):
            out.append(
                f'<rect id="{escape(o.id)}" x="{_f(-s.length / 2)}" y="{_f(-s.width / 2)}" '
                f'width="{_f(s.length)}" height="{_f(s.width)}" '
                f'transform="translate({_f(s.center.x)},{_f(s.center.y)}) rotate({_f(math.degrees(s.center.yaw))})"/>'
            )
        else:
            out.append(f'<circle id="{escape(o.id)}" cx="{_f(s.center[0])}" cy="{_f(s.center[1])}" r="{_f(s.radius)}"/>')
    out.append("</g>")

    mission = test.mission.polyline()
    out.append('<polyline id="mission" fill="none" stroke="#9e9e9e" stroke-width="0.03" '
               'stroke-dasharray="0.15,0.1" points="' + " ".join(f"{_f(p.x)},{_f(p.y)}" for p in mission) + '"/>')
    pts = " ".join(f"{_f(s.pose.x)},{_f(s.pose.y)}" for s in log.samples)
    color = COLORS.get(outcome, "#1565c0")
    out.append(f'<polyline id="footprint-trace" fill="none" stroke="{color}" stroke-opacity="0.35" '
               f'stroke-linejoin="round" stroke-linecap="round" stroke-width="{_f(test.robot.footprint_width)}" '
               f'points="{pts}"/>')
    out.append(f'<polyline id="trajectory" fill="none" stroke="{color}" stroke-width="0.03" points="{pts}"/>')
    start, goal = test.mission.start, test.mission.goal
    out.append(f'<circle id="start" cx="{_f(start.x)}" cy="{_f(start.y)}" r="0.15" fill="#1565c0"/>')
    for i, wp in enumerate(test.mission.waypoints[:-1]):
        out.append(f'<circle id="waypoint-{i}" cx="{_f(wp.x)}" cy="{_f(wp.y)}" r="0.1" fill="#9e9e9e"/>')
    out.append(f'<circle id="goal" cx="{_f(goal.x)}" cy="{_f(goal.y)}" r="{_f(test.robot.goal_position_tolerance)}" '
               'fill="none" stroke="#1565c0" stroke-width="0.05"/>')
    end = log.samples[-1].pose
    out.append(f'<rect id="final-footprint" x="{_f(-test.robot.footprint_length / 2)}" '
               f'y="{_f(-test.robot.footprint_width / 2)}" width="{_f(test.robot.footprint_length)}" '
               f'height="{_f(test.robot.footprint_width)}" fill="none" stroke="{color}" stroke-width="0.03" '
               f'transform="translate({_f(end.x)},{_f(end.y)}) rotate({_f(math.degrees(end.yaw))})"/>')
    out.append("</g>")

    lines = [f"{test.name} | {log.subject_id} | {outcome}"]
    if math.isfinite(min_distance):
        lines.append(f"min distance: {min_distance:.3f} m")
    if math.isfinite(min_gap):
        lines.append(f"min gap: {min_gap:.3f} m")
    for i, text in enumerate(lines):
        out.append(f'<text x="{_f(x0 + 0.2)}" y="{_f(-y1 - header_h + 0.35 + 0.35 * i)}" '
                   f'font-family="monospace" font-size="0.28" fill="#212121">{escape(text)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_comparison(comparison, width: float = 720.0, height: float = 400.0) -> str:
    """Two-sided bar chart: success rates above the axis, safety-stop rates below,
    one bar pair (subject A, subject B) per scenario."""
    rows = comparison.rows
    colors = ("#90a4ae", "#1565c0")
    left, right, top, bottom = 60.0, 20.0, 40.0, 40.0
    plot_w = width - left - right
    half = (height - top - bottom) / 2.0
    axis_y = top + half
    group_w = plot_w / max(1, len(rows))
    bar_w = group_w * 0.3
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
        f'<text x="{_f(left)}" y="20" font-family="sans-serif" font-size="13">Success (up) / Safety-Stop (down): '
        f'{escape(comparison.subject_a)} vs {escape(comparison.subject_b)}</text>',
    ]
    for k, label in ((0, "100%"), (0.5, "50%"), (1, "0%"), (1.5, "50%"), (2, "100%")):
        y = top + k * half
        out.append(f'<line x1="{_f(left)}" y1="{_f(y)}" x2="{_f(width - right)}" y2="{_f(y)}" '
                   f'stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text x="{_f(left - 6)}" y="{_f(y + 4)}" font-family="sans-serif" font-size="10" '
                   f'text-anchor="end">{label}</text>')
    for i, r in enumerate(rows):
        gx = left + i * group_w + group_w * 0.2
        for j, (succ, stop) in enumerate(((r.success_a, r.safety_stop_a), (r.success_b, r.safety_stop_b))):
            x = gx + j * bar_w
            up = half * succ / 100.0
            down = half * stop / 100.0
            who = comparison.subject_a if j == 0 else comparison.subject_b
            out.append(f'<rect class="success" data-subject="{escape(who)}" data-scenario="{escape(r.scenario)}" '
                       f'x="{_f(x)}" y="{_f(axis_y - up)}" width="{_f(bar_w)}" height="{_f(up)}" fill="{colors[j]}"/>')
            out.append(f'<rect class="safety-stop" data-subject="{escape(who)}" data-scenario="{escape(r.scenario)}" '
                       f'x="{_f(x)}" y="{_f(axis_y)}" width="{_f(bar_w)}" height="{_f(down)}" fill="{colors[j]}" '
                       'fill-opacity="0.55"/>')
        out.append(f'<text x="{_f(gx + bar_w)}" y="{_f(height - bottom + 16)}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="middle">{escape(r.scenario)}</text>')
    out.append(f'<line x1="{_f(left)}" y1="{_f(axis_y)}" x2="{_f(width - right)}" y2="{_f(axis_y)}" '
               'stroke="#212121" stroke-width="1.5"/>')
    for j, name in enumerate((comparison.subject_a, comparison.subject_b)):
        x = width - right - 200 + j * 100
        out.append(f'<rect x="{_f(x)}" y="8" width="10" height="10" fill="{colors[j]}"/>')
        out.append(f'<text x="{_f(x + 14)}" y="17" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
