"""Planner interface shared by the built-in and external subjects."""

from __future__ import annotations

import math
from dataclasses import dataclass

from navtestgen.geometry import ObstacleShape, Pose2D, normalize_angle
from navtestgen.safety import VelocityCommand, ZERO_COMMAND
from navtestgen.scenario import RobotConfig, TestDefinition


class SubjectError(RuntimeError):
    """The planner raised, diverged or broke its protocol."""


class UnknownSubject(ValueError):
    pass


@dataclass(frozen=True)
class SensorSnapshot:
    t: float
    robot_pose: Pose2D
    current_waypoint: Pose2D
    is_goal: bool
    visible_obstacles: tuple[ObstacleShape, ...]


class Subject:
    """A navigation algorithm under test.

    Instances keep state across ``plan_step`` calls within one test and are
    cleared by ``reset`` before the next one.
    """

    kind = "subject"

    def __init__(self, **params):
        self.params = params

    @property
    def subject_id(self) -> str:
        return self.kind

    def reset(self, test: TestDefinition) -> None:
        pass

    def plan_step(self, snapshot: SensorSnapshot, config: RobotConfig) -> VelocityCommand:
        raise NotImplementedError

    def close(self) -> None:
        pass


def goal_hold(snapshot: SensorSnapshot, config: RobotConfig, yaw_gain: float) -> VelocityCommand | None:
    """Command for a robot already inside the position tolerance of its waypoint.

    Returns None when the robot still has to travel. At the final goal the
    robot turns in place until the yaw tolerance is met, then stops.
    """
    pose, wp = snapshot.robot_pose, snapshot.current_waypoint
    if math.hypot(wp.x - pose.x, wp.y - pose.y) > config.goal_position_tolerance:
        return None
    if not snapshot.is_goal:
        return ZERO_COMMAND
    err = normalize_angle(wp.yaw - pose.yaw)
    if abs(err) <= config.goal_yaw_tolerance:
        return ZERO_COMMAND
    return VelocityCommand(0.0, 0.0, max(-config.max_yaw_rate, min(config.max_yaw_rate, yaw_gain * err)))


def world_to_body(vx_w: float, vy_w: float, yaw: float) -> tuple[float, float]:
    c, s = math.cos(yaw), math.sin(yaw)
    return (vx_w * c + vy_w * s, -vx_w * s + vy_w * c)
