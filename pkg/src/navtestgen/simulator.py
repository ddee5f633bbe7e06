"""Fixed-step kinematic simulation of one test against one subject."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from navtestgen.geometry import FootprintDistance, Pose2D, normalize_angle, point_shape_distance
from navtestgen.safety import (
    DT,
    ZERO_COMMAND,
    SafetyDecision,
    SafetyLayerState,
    VelocityCommand,
    clamp_command,
    integrate,
    safety_check,
)
from navtestgen.scenario import TestDefinition
from navtestgen.subjects.base import SensorSnapshot, Subject

LOG_SCHEMA = 1


class EventKind(str, enum.Enum):
    SAFETY_STOP = "SafetyStop"
    COLLISION = "Collision"
    WAYPOINT_REACHED = "WaypointReached"
    GOAL_REACHED = "GoalReached"
    TIMEOUT = "Timeout"
    SUBJECT_ERROR = "SubjectError"


TERMINAL_EVENTS = frozenset({
    EventKind.SAFETY_STOP, EventKind.COLLISION, EventKind.GOAL_REACHED,
    EventKind.TIMEOUT, EventKind.SUBJECT_ERROR,
})


@dataclass(frozen=True)
class Sample:
    t: float
    pose: Pose2D
    command: VelocityCommand
    min_obstacle_distance: float


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    detail: str = ""


@dataclass
class TrajectoryLog:
    test_name: str
    subject_id: str
    dt: float
    samples: list[Sample] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)

    @property
    def terminal_event(self) -> EventKind | None:
        if self.events and self.events[-1].kind in TERMINAL_EVENTS:
            return self.events[-1].kind
        return None

    @property
    def final_pose(self) -> Pose2D:
        return self.samples[-1].pose


class LogFormatError(ValueError):
    pass


def visible_obstacles(pose: Pose2D, shapes, sensing_radius: float):
    return tuple(s for s in shapes if point_shape_distance(pose.x, pose.y, s) <= sensing_radius)


def run_test(test: TestDefinition, subject: Subject, dt: float = DT,
             safety: SafetyLayerState | None = None) -> TrajectoryLog:
    """Simulate ``test`` until a terminal event and return the full log.

    Each loop iteration records one sample at t = k * dt holding the pose and
    the command issued at that instant. Planner exceptions end the run with a
    SubjectError event instead of propagating.
    """
    robot = test.robot
    if safety is None:
        safety = SafetyLayerState(1.0, robot.safety_margin)
    shapes = test.shapes()
    fd = FootprintDistance(shapes, robot.footprint_length, robot.footprint_width)
    footprint = (robot.footprint_length, robot.footprint_width)
    waypoints = test.mission.waypoints
    budget = test.mission.time_budget
    log = TrajectoryLog(test.name, subject.subject_id, dt)
    samples, events = log.samples, log.events

    x, y, yaw = test.mission.start.x, test.mission.start.y, test.mission.start.yaw
    wp_index = 0
    k = 0
    try:
        subject.reset(test)
    except Exception as e:  # noqa: BLE001 - any planner failure is a test outcome
        samples.append(Sample(0.0, Pose2D(x, y, yaw), ZERO_COMMAND, fd.min(x, y, yaw)))
        events.append(Event(0.0, EventKind.SUBJECT_ERROR, f"{type(e).__name__}: {e}"))
        return log

    while True:
        t = k * dt
        pose = Pose2D(x, y, yaw)
        d = fd.min(x, y, yaw)

        def stop(kind: EventKind, cmd: VelocityCommand = ZERO_COMMAND, detail: str = ""):
            samples.append(Sample(t, pose, cmd, d))
            events.append(Event(t, kind, detail))
            return log

        if d <= 0.0:
            return stop(EventKind.COLLISION)
        wp = waypoints[wp_index]
        is_goal = wp_index == len(waypoints) - 1
        if math.hypot(wp.x - x, wp.y - y) <= robot.goal_position_tolerance:
            if not is_goal:
                events.append(Event(t, EventKind.WAYPOINT_REACHED, str(wp_index)))
                wp_index += 1
                wp = waypoints[wp_index]
                is_goal = wp_index == len(waypoints) - 1
            elif abs(normalize_angle(wp.yaw - yaw)) <= robot.goal_yaw_tolerance:
                return stop(EventKind.GOAL_REACHED)
        if t >= budget:
            return stop(EventKind.TIMEOUT)

        snap = SensorSnapshot(t, pose, wp, is_goal, visible_obstacles(pose, shapes, robot.sensing_radius))
        try:
            cmd = clamp_command(subject.plan_step(snap, robot), robot.nominal_speed, robot.max_yaw_rate)
        except Exception as e:  # noqa: BLE001
            return stop(EventKind.SUBJECT_ERROR, detail=f"{type(e).__name__}: {e}")
        if safety_check(pose, cmd, fd, safety, footprint, dt) is SafetyDecision.HALT:
            return stop(EventKind.SAFETY_STOP, cmd)
        samples.append(Sample(t, pose, cmd, d))
        x, y, yaw = integrate(x, y, yaw, cmd.vx, cmd.vy, cmd.wyaw, dt)
        k += 1


# --- log files ---------------------------------------------------------------

def _num(v: float):
    return None if math.isinf(v) else v


def log_records(log: TrajectoryLog):
    yield {"record": "header", "schema": LOG_SCHEMA, "test_name": log.test_name,
           "subject_id": log.subject_id, "dt": log.dt}
    for s in log.samples:
        yield {"record": "sample", "t": s.t, "x": s.pose.x, "y": s.pose.y, "yaw": s.pose.yaw,
               "vx": s.command.vx, "vy": s.command.vy, "wyaw": s.command.wyaw,
               "d": _num(s.min_obstacle_distance)}
    for e in log.events:
        yield {"record": "event", "t": e.t, "kind": e.kind.value, "detail": e.detail}
    yield {"record": "end", "samples": len(log.samples), "events": len(log.events)}


def dumps_log(log: TrajectoryLog) -> str:
    return "".join(json.dumps(r, allow_nan=False) + "\n" for r in log_records(log))


def write_log(log: TrajectoryLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_log(log))


def loads_log(text: str) -> TrajectoryLog:
    lines = text.splitlines()
    try:
        records = [json.loads(line) for line in lines if line.strip()]
    except json.JSONDecodeError as e:
        raise LogFormatError(f"corrupt log line: {e}") from None
    if not records or records[0].get("record") != "header":
        raise LogFormatError("log does not start with a header record")
    header = records[0]
    if header.get("schema") != LOG_SCHEMA:
        raise LogFormatError(f"log schema version {header.get('schema')!r} is not supported "
                             f"(this reader handles version {LOG_SCHEMA})")
    if records[-1].get("record") != "end":
        raise LogFormatError("log is truncated: missing end record")
    try:
        log = TrajectoryLog(header["test_name"], header["subject_id"], header["dt"])
        for r in records[1:-1]:
            kind = r.get("record")
            if kind == "sample":
                d = math.inf if r["d"] is None else r["d"]
                log.samples.append(Sample(r["t"], Pose2D(r["x"], r["y"], r["yaw"]),
                                          VelocityCommand(r["vx"], r["vy"], r["wyaw"]), d))
            elif kind == "event":
                log.events.append(Event(r["t"], EventKind(r["kind"]), r.get("detail", "")))
            else:
                raise LogFormatError(f"unexpected record type {kind!r}")
        end = records[-1]
        if end["samples"] != len(log.samples) or end["events"] != len(log.events):
            raise LogFormatError("record counts do not match the end record")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, LogFormatError):
            raise
        raise LogFormatError(f"malformed log record: {e!r}") from None
    return log


def read_log(path) -> TrajectoryLog:
    with open(path, encoding="utf-8") as fh:
        return loads_log(fh.read())
