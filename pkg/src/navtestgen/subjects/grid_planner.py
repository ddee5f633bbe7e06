"""RefNav-B: occupancy-grid shortest-path replanner with a pure-pursuit tracker."""

from __future__ import annotations

import math

import numpy as np
from skimage.graph import MCP_Geometric

from navtestgen.geometry import (
    FootprintDistance,
    OrientedBox,
    bounding_radius,
    normalize_angle,
    shape_center,
)
from navtestgen.safety import SafetyDecision, SafetyLayerState, VelocityCommand, safety_check
from navtestgen.subjects.base import SensorSnapshot, Subject, goal_hold, world_to_body


def clearance_grid(xs: np.ndarray, ys: np.ndarray, shapes) -> np.ndarray:
    """Distance from every cell center to the nearest shape (inf without shapes)."""
    gx, gy = np.meshgrid(xs, ys)
    out = np.full(gx.shape, np.inf)
    for shape in shapes:
        if isinstance(shape, OrientedBox):
            c, s = math.cos(shape.center.yaw), math.sin(shape.center.yaw)
            dx, dy = gx - shape.center.x, gy - shape.center.y
            lx = np.maximum(np.abs(dx * c + dy * s) - 0.5 * shape.length, 0.0)
            ly = np.maximum(np.abs(-dx * s + dy * c) - 0.5 * shape.width, 0.0)
            d = np.hypot(lx, ly)
        else:
            d = np.maximum(np.hypot(gx - shape.center[0], gy - shape.center[1]) - shape.radius, 0.0)
        np.minimum(out, d, out=out)
    return out


class GridReplanner(Subject):
    """Replans a clearance-weighted shortest path on a fixed-resolution grid
    every ``replan_period`` seconds and tracks it with pure pursuit.

    Cells closer to an obstacle than the footprint half-diagonal plus the
    safety margin are expensive; cells closer than the half-width plus margin
    are impassable, so the robot can still thread a gap lengthwise. Before
    sending a command it runs its own constant-command rollout over
    ``guard_lookahead`` seconds (shorter than the safety layer's horizon) and
    backs off the speed or turns in place if that rollout gets too close.
    """

    kind = "refnav_b"

    def __init__(self, resolution: float = 0.1, replan_period: float = 1.0, lookahead: float = 0.6,
                 border: float = 2.0, tight_penalty: float = 20.0, clearance_weight: float = 2.0,
                 comfort_clearance: float = 1.0, yaw_gain: float = 2.0, guard_pad: float = 0.03,
                 guard_lookahead: float = 0.5):
        super().__init__(resolution=resolution, replan_period=replan_period, lookahead=lookahead,
                         border=border, tight_penalty=tight_penalty,
                         clearance_weight=clearance_weight, comfort_clearance=comfort_clearance,
                         yaw_gain=yaw_gain, guard_pad=guard_pad, guard_lookahead=guard_lookahead)
        self.resolution = resolution
        self.replan_period = replan_period
        self.lookahead = lookahead
        self.border = border
        self.tight_penalty = tight_penalty
        self.clearance_weight = clearance_weight
        self.comfort_clearance = comfort_clearance
        self.yaw_gain = yaw_gain
        self.guard_pad = guard_pad
        self.guard_lookahead = guard_lookahead
        self.path: np.ndarray | None = None
        self._next_replan = 0.0
        self._target_key = None

    def reset(self, test) -> None:
        self.path = None
        self._next_replan = 0.0
        self._target_key = None

    def plan_path(self, snapshot: SensorSnapshot, config) -> np.ndarray | None:
        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        shapes = snapshot.visible_obstacles
        px = [pose.x, wp.x]
        py = [pose.y, wp.y]
        for shape in shapes:
            cx, cy = shape_center(shape)
            r = bounding_radius(shape)
            px += [cx - r, cx + r]
            py += [cy - r, cy + r]
        res = self.resolution
        x0 = math.floor((min(px) - self.border) / res) * res
        y0 = math.floor((min(py) - self.border) / res) * res
        nx = int(math.ceil((max(px) + self.border - x0) / res)) + 1
        ny = int(math.ceil((max(py) + self.border - y0) / res)) + 1
        xs = x0 + res * np.arange(nx)
        ys = y0 + res * np.arange(ny)

        clear = clearance_grid(xs, ys, shapes)
        hard = 0.5 * config.footprint_width + config.safety_margin
        soft = config.half_diagonal + config.safety_margin
        cost = 1.0 + self.clearance_weight * np.clip(self.comfort_clearance - clear, 0.0, None)
        cost[clear < soft] += self.tight_penalty
        cost[clear < hard] = np.inf

        start = (min(max(int(round((pose.y - y0) / res)), 0), ny - 1),
                 min(max(int(round((pose.x - x0) / res)), 0), nx - 1))
        goal = (min(max(int(round((wp.y - y0) / res)), 0), ny - 1),
                min(max(int(round((wp.x - x0) / res)), 0), nx - 1))
        # The robot may already stand inside an inflated zone; let it leave.
        cost[start] = min(cost[start], 1.0 + self.tight_penalty)
        cost[goal] = min(cost[goal], 1.0 + self.tight_penalty)

        mcp = MCP_Geometric(cost, fully_connected=True)
        cumulative, _ = mcp.find_costs(starts=[start], ends=[goal])
        if not np.isfinite(cumulative[goal]):
            return None
        cells = np.asarray(mcp.traceback(goal), dtype=float)
        path = np.column_stack([x0 + res * cells[:, 1], y0 + res * cells[:, 0]])
        path[-1] = (wp.x, wp.y)
        return path

    def _pursuit_target(self, x: float, y: float) -> tuple[float, float]:
        path = self.path
        d2 = (path[:, 0] - x) ** 2 + (path[:, 1] - y) ** 2
        i = int(np.argmin(d2))
        remaining = self.lookahead
        px, py = x, y
        for j in range(i, len(path)):
            qx, qy = path[j]
            seg = math.hypot(qx - px, qy - py)
            if seg >= remaining:
                k = remaining / seg
                return (px + (qx - px) * k, py + (qy - py) * k)
            remaining -= seg
            px, py = qx, qy
        return (float(path[-1, 0]), float(path[-1, 1]))

    def plan_step(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        hold = goal_hold(snapshot, config, self.yaw_gain)
        if hold is not None:
            return hold
        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        key = (wp.x, wp.y)
        if self.path is None or snapshot.t >= self._next_replan or key != self._target_key:
            self.path = self.plan_path(snapshot, config)
            self._next_replan = snapshot.t + self.replan_period
            self._target_key = key
        if self.path is None:
            return VelocityCommand()

        tx, ty = self._pursuit_target(pose.x, pose.y)
        dx, dy = tx - pose.x, ty - pose.y
        norm = math.hypot(dx, dy)
        if norm < 1e-9:
            return VelocityCommand()
        fd = FootprintDistance(snapshot.visible_obstacles, config.footprint_length, config.footprint_width)
        near = fd.min(pose.x, pose.y, pose.yaw)
        speed = config.nominal_speed * min(1.0, max(0.3, (near - config.safety_margin) / 0.5))
        if snapshot.is_goal:
            dist = math.hypot(wp.x - pose.x, wp.y - pose.y)
            speed *= min(1.0, dist / self.lookahead)
        err = normalize_angle(math.atan2(dy, dx) - pose.yaw)
        if abs(err) > 0.8:
            speed *= 0.3
        w = max(-config.max_yaw_rate, min(config.max_yaw_rate, self.yaw_gain * err))
        vx, vy = world_to_body(speed * dx / norm, speed * dy / norm, pose.yaw)
        return self._guard(VelocityCommand(vx, vy, w), snapshot, config, fd)

    def _guard(self, cmd: VelocityCommand, snapshot, config, fd) -> VelocityCommand:
        if not len(fd) or self.guard_lookahead <= 0:
            return cmd
        state = SafetyLayerState(self.guard_lookahead, config.safety_margin + self.guard_pad)
        footprint = (config.footprint_length, config.footprint_width)
        options = [cmd]
        options += [VelocityCommand(cmd.vx * k, cmd.vy * k, cmd.wyaw) for k in (0.5, 0.25)]
        options += [VelocityCommand(0.0, 0.0, cmd.wyaw), VelocityCommand(cmd.vx * 0.25, cmd.vy * 0.25, 0.0)]
        for option in options:
            if safety_check(snapshot.robot_pose, option, fd, state, footprint) is SafetyDecision.PROCEED:
                return option
        return options[2]
