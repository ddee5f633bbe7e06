"""RefNav-A: memoryless attractive/repulsive potential field."""

from __future__ import annotations

import math

from navtestgen.geometry import closest_point, footprint_at, normalize_angle, shape_distance
from navtestgen.safety import VelocityCommand
from navtestgen.subjects.base import SensorSnapshot, Subject, goal_hold, world_to_body


class PotentialFieldPlanner(Subject):
    """Unit attraction towards the current waypoint plus repulsion
    ``repulsion * (1/d - 1/influence) / d**2`` from every obstacle whose
    footprint distance ``d`` is inside ``influence``.

    Drives at full nominal speed along the net force and turns its body to
    face it. No memory and no replanning. The repulsion is stiff close to
    obstacles, so in gaps narrower than about 1.5 m the commanded direction
    overshoots from one side to the other at every step and the robot either
    chatters in place or slips into the safety layer.
    """

    kind = "refnav_a"

    def __init__(self, influence: float = 1.5, attraction: float = 1.0,
                 repulsion: float = 0.1, yaw_gain: float = 2.0, slowdown_radius: float = 0.6):
        super().__init__(influence=influence, attraction=attraction, repulsion=repulsion,
                         yaw_gain=yaw_gain, slowdown_radius=slowdown_radius)
        self.influence = influence
        self.attraction = attraction
        self.repulsion = repulsion
        self.yaw_gain = yaw_gain
        self.slowdown_radius = slowdown_radius

    def force(self, snapshot: SensorSnapshot, config) -> tuple[float, float]:
        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        dx, dy = wp.x - pose.x, wp.y - pose.y
        dist = math.hypot(dx, dy)
        fx, fy = self.attraction * dx / dist, self.attraction * dy / dist
        fp = footprint_at(pose, config.footprint_length, config.footprint_width)
        for shape in snapshot.visible_obstacles:
            d = shape_distance(fp, shape)
            if d >= self.influence:
                continue
            cx, cy = closest_point(pose.x, pose.y, shape)
            ux, uy = pose.x - cx, pose.y - cy
            n = math.hypot(ux, uy)
            if n == 0.0:
                continue
            d = max(d, 0.02)
            mag = self.repulsion * (1.0 / d - 1.0 / self.influence) / (d * d)
            fx += mag * ux / n
            fy += mag * uy / n
        return fx, fy

    def plan_step(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        hold = goal_hold(snapshot, config, self.yaw_gain)
        if hold is not None:
            return hold
        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        fx, fy = self.force(snapshot, config)
        norm = math.hypot(fx, fy)
        if norm < 1e-9:
            return VelocityCommand()
        dist = math.hypot(wp.x - pose.x, wp.y - pose.y)
        speed = config.nominal_speed
        if snapshot.is_goal:
            speed *= min(1.0, dist / self.slowdown_radius)
        vx, vy = world_to_body(speed * fx / norm, speed * fy / norm, pose.yaw)
        err = normalize_angle(math.atan2(fy, fx) - pose.yaw)
        w = max(-config.max_yaw_rate, min(config.max_yaw_rate, self.yaw_gain * err))
        return VelocityCommand(vx, vy, w)
