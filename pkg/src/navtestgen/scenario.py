"""Declarative test definitions: robot, mission and static obstacles.

Files are YAML with ``schema: 1``. Lengths are meters. Angles may be given
in degrees (``yaw_deg``, ``max_yaw_rate_deg``, ``goal_yaw_tolerance_deg``) or
radians (``yaw``, ...); the serializer always writes radians so that a
parse/serialize round trip is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Any

import yaml

from navtestgen.geometry import (
    CircleShape,
    ObstacleShape,
    OrientedBox,
    Pose2D,
    footprint_at,
    shape_distance,
)

SCHEMA_VERSION = 1
SEED_NAMES = ("boxes1", "boxes2", "corridor", "cylinders", "l_corridor")


class SchemaError(ValueError):
    """Document structure is wrong: unknown, missing or mistyped field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ValidationError(ValueError):
    """Document is well-formed but violates a scenario invariant."""


@dataclass(frozen=True)
class RobotConfig:
    footprint_length: float = 1.05
    footprint_width: float = 0.55
    nominal_speed: float = 0.5
    max_yaw_rate: float = 1.0
    sensing_radius: float = 5.0
    goal_position_tolerance: float = 0.25
    goal_yaw_tolerance: float = 0.35
    safety_margin: float = 0.05

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"robot.{name} must be a positive number, got {value!r}")
        if self.goal_position_tolerance >= self.sensing_radius:
            raise ValidationError("robot.goal_position_tolerance must be below robot.sensing_radius")

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.footprint_length, self.footprint_width)


def polyline_length(points) -> float:
    return sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(points, points[1:]))


@dataclass(frozen=True)
class Mission:
    start: Pose2D
    waypoints: tuple[Pose2D, ...]
    time_budget: float

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if not self.waypoints:
            raise ValidationError("mission.waypoints needs at least one entry")
        if not (math.isfinite(self.time_budget) and self.time_budget > 0):
            raise ValidationError(f"mission.time_budget must be positive, got {self.time_budget}")
        points = self.polyline()
        for i, (a, b) in enumerate(zip(points, points[1:])):
            if a.x == b.x and a.y == b.y:
                raise ValidationError(f"mission.waypoints[{i}] repeats the previous position")

    def polyline(self) -> list[Pose2D]:
        return [self.start, *self.waypoints]

    @property
    def goal(self) -> Pose2D:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return polyline_length(self.polyline())


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: ObstacleShape


@dataclass(frozen=True)
class TestDefinition:
    __test__ = False  # keep pytest from collecting this class

    name: str
    robot: RobotConfig
    mission: Mission
    obstacles: tuple[Obstacle, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not self.name:
            raise ValidationError("name must be non-empty")
        if not (isinstance(self.rng_seed, int) and self.rng_seed >= 0):
            raise ValidationError(f"rng_seed must be an unsigned integer, got {self.rng_seed!r}")
        ids = [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate obstacle ids in {ids}")
        r = self.robot
        checks = [("mission.start", self.mission.start)]
        checks += [(f"mission.waypoints[{i}]", w) for i, w in enumerate(self.mission.waypoints)]
        for label, pose in checks:
            fp = footprint_at(pose, r.footprint_length, r.footprint_width)
            for o in self.obstacles:
                if shape_distance(fp, o.shape) <= 0.0:
                    raise ValidationError(f"{label} footprint intersects obstacle {o.id!r}")

    @property
    def family(self) -> str:
        return family_of(self.name)

    def shapes(self) -> list[ObstacleShape]:
        return [o.shape for o in self.obstacles]


def family_of(name: str) -> str:
    """Scenario family of a test name: the part before the first ``__``."""
    return name.split("__", 1)[0]


def default_time_budget(start: Pose2D, waypoints, robot: RobotConfig) -> float:
    return 5.0 * polyline_length([start, *waypoints]) / robot.nominal_speed


# --- parsing ---------------------------------------------------------------

_MISSING = object()


class _Reader:
    """Walks a mapping, popping keys and reporting paths on failure."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise SchemaError(path, f"expected a mapping, got {type(data).__name__}")
        self.data = dict(data)
        self.path = path

    def _sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key: str, default=_MISSING):
        if key not in self.data:
            if default is _MISSING:
                raise SchemaError(self._sub(key), "required field is missing")
            return default
        return self.data.pop(key)

    def number(self, key: str, default=_MISSING) -> float:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(self._sub(key), f"expected a number, got {v!r}")
        return float(v)

    def angle(self, key: str, default=_MISSING) -> float:
        """Read ``key`` (radians) or ``key_deg`` (degrees), not both."""
        deg_key = f"{key}_deg"
        if key in self.data and deg_key in self.data:
            raise SchemaError(self._sub(key), f"give either {key} or {deg_key}, not both")
        if deg_key in self.data:
            return math.radians(self.number(deg_key))
        return self.number(key, default)

    def child(self, key: str, default=_MISSING) -> "_Reader | None":
        v = self.raw(key, default)
        if v is None and default is None:
            return None
        return _Reader(v, self._sub(key))

    def finish(self):
        if self.data:
            extra = sorted(map(str, self.data))
            raise SchemaError(self._sub(extra[0]), f"unknown field(s) {extra}")


def _read_pose(r: _Reader) -> Pose2D:
    x, y, yaw = r.number("x"), r.number("y"), r.angle("yaw", 0.0)
    try:
        pose = Pose2D(x, y, yaw)
    except ValueError as e:
        raise ValidationError(f"{r.path}: {e}") from None
    r.finish()
    return pose


def _read_robot(r: _Reader | None) -> RobotConfig:
    if r is None:
        return RobotConfig()
    d = RobotConfig()
    kw = {}
    fp = r.child("footprint", None)
    if fp is not None:
        kw["footprint_length"] = fp.number("length", d.footprint_length)
        kw["footprint_width"] = fp.number("width", d.footprint_width)
        fp.finish()
    for name in ("nominal_speed", "sensing_radius", "goal_position_tolerance", "safety_margin"):
        kw[name] = r.number(name, getattr(d, name))
    for name in ("max_yaw_rate", "goal_yaw_tolerance"):
        kw[name] = r.angle(name, getattr(d, name))
    r.finish()
    return RobotConfig(**kw)


def _read_obstacle(r: _Reader) -> Obstacle:
    oid = r.raw("id")
    if not isinstance(oid, (str, int)) or isinstance(oid, bool):
        raise SchemaError(f"{r.path}.id", f"expected a string, got {oid!r}")
    kinds = [k for k in ("box", "circle") if k in r.data]
    if len(kinds) != 1:
        raise SchemaError(r.path, "exactly one of 'box' or 'circle' is required")
    s = r.child(kinds[0])
    try:
        if kinds[0] == "box":
            shape = OrientedBox(Pose2D(s.number("x"), s.number("y"), s.angle("yaw", 0.0)),
                                s.number("length"), s.number("width"))
        else:
            shape = CircleShape((s.number("x"), s.number("y")), s.number("diameter"))
    except ValueError as e:
        if isinstance(e, SchemaError):
            raise
        raise ValidationError(f"{s.path}: {e}") from None
    s.finish()
    r.finish()
    return Obstacle(str(oid), shape)


def test_definition_from_dict(doc: Any) -> TestDefinition:
    r = _Reader(doc, "")
    schema = r.raw("schema")
    if schema != SCHEMA_VERSION:
        raise SchemaError("schema", f"unsupported schema version {schema!r}, expected {SCHEMA_VERSION}")
    name = r.raw("name")
    if not isinstance(name, str):
        raise SchemaError("name", f"expected a string, got {name!r}")
    rng_seed = r.raw("rng_seed", 0)
    if isinstance(rng_seed, bool) or not isinstance(rng_seed, int):
        raise SchemaError("rng_seed", f"expected an integer, got {rng_seed!r}")
    robot = _read_robot(r.child("robot", None))

    m = r.child("mission")
    start = _read_pose(m.child("start"))
    wps = m.raw("waypoints")
    if not isinstance(wps, list):
        raise SchemaError("mission.waypoints", "expected a list")
    waypoints = [_read_pose(_Reader(w, f"mission.waypoints[{i}]")) for i, w in enumerate(wps)]
    budget = m.raw("time_budget", None)
    if budget is None:
        budget = default_time_budget(start, waypoints, robot) if waypoints else 1.0
    elif isinstance(budget, bool) or not isinstance(budget, (int, float)):
        raise SchemaError("mission.time_budget", f"expected a number, got {budget!r}")
    m.finish()

    obs = r.raw("obstacles", [])
    if not isinstance(obs, list):
        raise SchemaError("obstacles", "expected a list")
    obstacles = [_read_obstacle(_Reader(o, f"obstacles[{i}]")) for i, o in enumerate(obs)]
    r.finish()
    mission = Mission(start, tuple(waypoints), float(budget))
    return TestDefinition(name, robot, mission, tuple(obstacles), rng_seed)


def parse_test_definition(text: str) -> TestDefinition:
    """Parse and validate a YAML test definition.

    Raises SchemaError for structural problems (with the offending path) and
    ValidationError for invariant violations such as a start pose inside an
    obstacle.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError("", f"malformed YAML: {e}") from None
    return test_definition_from_dict(doc)


def load_test_definition(path) -> TestDefinition:
    with open(path, encoding="utf-8") as fh:
        return parse_test_definition(fh.read())


# --- serialization ---------------------------------------------------------

def _pose_dict(p: Pose2D) -> dict:
    return {"x": p.x, "y": p.y, "yaw": p.yaw}


def shape_to_dict(shape: ObstacleShape) -> dict:
    if isinstance(shape, OrientedBox):
        return {"box": {"x": shape.center.x, "y": shape.center.y, "yaw": shape.center.yaw,
                        "length": shape.length, "width": shape.width}}
    return {"circle": {"x": shape.center[0], "y": shape.center[1], "diameter": shape.diameter}}


def shape_from_dict(d: dict) -> ObstacleShape:
    return _read_obstacle(_Reader({"id": "_", **d}, "shape")).shape


def robot_to_dict(r: RobotConfig) -> dict:
    return {
        "footprint": {"length": r.footprint_length, "width": r.footprint_width},
        "nominal_speed": r.nominal_speed,
        "max_yaw_rate": r.max_yaw_rate,
        "sensing_radius": r.sensing_radius,
        "goal_position_tolerance": r.goal_position_tolerance,
        "goal_yaw_tolerance": r.goal_yaw_tolerance,
        "safety_margin": r.safety_margin,
    }


def test_definition_to_dict(t: TestDefinition) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": t.name,
        "rng_seed": t.rng_seed,
        "robot": robot_to_dict(t.robot),
        "mission": {
            "start": _pose_dict(t.mission.start),
            "waypoints": [_pose_dict(w) for w in t.mission.waypoints],
            "time_budget": t.mission.time_budget,
        },
        "obstacles": [{"id": o.id, **shape_to_dict(o.shape)} for o in t.obstacles],
    }


def dump_yaml(doc: Any) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, allow_unicode=True, width=100)


def serialize_test_definition(t: TestDefinition) -> str:
    return dump_yaml(test_definition_to_dict(t))


# Imported into test modules; not pytest tests.
test_definition_from_dict.__test__ = False
test_definition_to_dict.__test__ = False


# --- bundled seeds ---------------------------------------------------------

def builtin_seed_text(name: str) -> str:
    if name not in SEED_NAMES:
        raise KeyError(f"unknown seed {name!r}; choose from {SEED_NAMES}")
    return resources.files("navtestgen.seeds").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def builtin_seeds() -> list[TestDefinition]:
    """The five bundled seed scenarios, in a fixed order."""
    return [parse_test_definition(builtin_seed_text(n)) for n in SEED_NAMES]


def with_obstacle(t: TestDefinition, index: int, shape: ObstacleShape) -> TestDefinition:
    obstacles = list(t.obstacles)
    obstacles[index] = replace(obstacles[index], shape=shape)
    return replace(t, obstacles=tuple(obstacles))
