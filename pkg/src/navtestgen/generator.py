"""(1+lambda) search that mutates a seed scenario towards failure-inducing variants."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable

import numpy as np

from navtestgen.geometry import CircleShape, OrientedBox, Pose2D, rigid_transform, shape_center
from navtestgen.scenario import TestDefinition, ValidationError, with_obstacle
from navtestgen.subjects import SubjectSpec
from navtestgen.suite import SuiteMember, TestSuite
from navtestgen.testbench import Outcome, TestResult, execute_many, store_result


class MutationKind(str, enum.Enum):
    MOVE_OBSTACLE = "MoveObstacle"
    RESIZE_OBSTACLE = "ResizeObstacle"
    ROTATE_OBSTACLE = "RotateObstacle"
    MOVE_WAYPOINT = "MoveWaypoint"
    NOOP = "NoOp"


@dataclass(frozen=True)
class Mutation:
    kind: MutationKind
    target: str = ""
    dx: float = 0.0
    dy: float = 0.0
    scale: float = 1.0
    rotation: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value, "target": self.target}
        if self.kind in (MutationKind.MOVE_OBSTACLE, MutationKind.MOVE_WAYPOINT):
            d.update(dx=self.dx, dy=self.dy)
        elif self.kind is MutationKind.RESIZE_OBSTACLE:
            d["scale"] = self.scale
        elif self.kind is MutationKind.ROTATE_OBSTACLE:
            d["rotation"] = self.rotation
        return d


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 21
    lam: int = 4
    restart_after: int = 5
    move_weight: float = 1.0
    resize_weight: float = 1.0
    rotate_weight: float = 1.0
    waypoint_weight: float = 1.0
    translation: float = 0.5
    scale_min: float = 0.8
    scale_max: float = 1.25
    rotation: float = math.radians(30.0)
    waypoint_translation: float = 0.5
    allow_waypoint_mutation: bool = False
    max_resample: int = 20
    rng_seed: int | None = None

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.lam < 1:
            raise ValueError("lambda must be >= 1")
        if self.restart_after < 1:
            raise ValueError("restart_after must be >= 1")
        if not 0 < self.scale_min <= self.scale_max:
            raise ValueError("need 0 < scale_min <= scale_max")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SearchConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if "rotation_deg" in d:
            d["rotation"] = math.radians(d.pop("rotation_deg"))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown search config field(s) {unknown}")
        return cls(**d)


@dataclass(frozen=True)
class Fitness:
    value: float
    outcome_at_eval: Outcome


FAILURES = frozenset({Outcome.SAFETY_STOP, Outcome.COLLISION})


def fitness_of(result: TestResult) -> Fitness:
    value = math.inf if result.metrics is None else result.metrics.min_obstacle_distance
    return Fitness(value, result.outcome)


def rank_key(fitness: Fitness, predicate_hit: bool = False) -> tuple:
    """Smaller is more challenging: predicate hits, then failures, then plain
    runs by minimum obstacle distance; errors come last."""
    if fitness.outcome_at_eval is Outcome.ERROR:
        cls = 2
    elif fitness.outcome_at_eval in FAILURES:
        cls = 0
    else:
        cls = 1
    return (0 if predicate_hit else 1, cls, fitness.value)


# --- mutation ------------------------------------------------------------------

def _kinds(t: TestDefinition, config: SearchConfig):
    boxes = [o.id for o in t.obstacles if isinstance(o.shape, OrientedBox)]
    options = []
    if t.obstacles:
        options += [(MutationKind.MOVE_OBSTACLE, config.move_weight),
                    (MutationKind.RESIZE_OBSTACLE, config.resize_weight)]
    if boxes:
        options.append((MutationKind.ROTATE_OBSTACLE, config.rotate_weight))
    if config.allow_waypoint_mutation:
        options.append((MutationKind.MOVE_WAYPOINT, config.waypoint_weight))
    return [(k, w) for k, w in options if w > 0]


def sample_mutation(t: TestDefinition, config: SearchConfig, rng: np.random.Generator) -> Mutation:
    options = _kinds(t, config)
    if not options:
        return Mutation(MutationKind.NOOP)
    weights = np.array([w for _, w in options], dtype=float)
    kind = options[int(rng.choice(len(options), p=weights / weights.sum()))][0]
    if kind is MutationKind.MOVE_WAYPOINT:
        targets = ["start", *map(str, range(len(t.mission.waypoints)))]
        target = targets[int(rng.integers(len(targets)))]
        a = config.waypoint_translation
        return Mutation(kind, target, dx=float(rng.uniform(-a, a)), dy=float(rng.uniform(-a, a)))
    if kind is MutationKind.ROTATE_OBSTACLE:
        ids = [o.id for o in t.obstacles if isinstance(o.shape, OrientedBox)]
    else:
        ids = [o.id for o in t.obstacles]
    target = ids[int(rng.integers(len(ids)))]
    if kind is MutationKind.MOVE_OBSTACLE:
        a = config.translation
        return Mutation(kind, target, dx=float(rng.uniform(-a, a)), dy=float(rng.uniform(-a, a)))
    if kind is MutationKind.RESIZE_OBSTACLE:
        return Mutation(kind, target, scale=float(rng.uniform(config.scale_min, config.scale_max)))
    return Mutation(kind, target, rotation=float(rng.uniform(-config.rotation, config.rotation)))


def apply_mutation(t: TestDefinition, m: Mutation) -> TestDefinition:
    """Return the mutated test; raises ValidationError if it breaks a scenario invariant."""
    if m.kind is MutationKind.NOOP:
        return t
    if m.kind is MutationKind.MOVE_WAYPOINT:
        mission = t.mission
        if m.target == "start":
            p = mission.start
            mission = replace(mission, start=Pose2D(p.x + m.dx, p.y + m.dy, p.yaw))
        else:
            i = int(m.target)
            wps = list(mission.waypoints)
            wps[i] = Pose2D(wps[i].x + m.dx, wps[i].y + m.dy, wps[i].yaw)
            mission = replace(mission, waypoints=tuple(wps))
        return replace(t, mission=mission)
    index = next((i for i, o in enumerate(t.obstacles) if o.id == m.target), None)
    if index is None:
        raise KeyError(f"{t.name}: no obstacle {m.target!r}")
    shape = t.obstacles[index].shape
    if m.kind is MutationKind.MOVE_OBSTACLE:
        shape = rigid_transform(shape, m.dx, m.dy, 0.0)
    elif m.kind is MutationKind.ROTATE_OBSTACLE:
        shape = rigid_transform(shape, 0.0, 0.0, m.rotation, pivot=shape_center(shape))
    elif isinstance(shape, OrientedBox):
        shape = OrientedBox(shape.center, shape.length * m.scale, shape.width * m.scale)
    else:
        shape = CircleShape(shape.center, shape.diameter * m.scale)
    return with_obstacle(t, index, shape)


def mutate(t: TestDefinition, config: SearchConfig, rng: np.random.Generator) -> tuple[TestDefinition, Mutation]:
    """Apply exactly one random mutation that keeps the test valid.

    Invalid draws are resampled up to ``config.max_resample`` times; after that
    the parent comes back unchanged with a NoOp marker.
    """
    for _ in range(config.max_resample):
        m = sample_mutation(t, config, rng)
        if m.kind is MutationKind.NOOP:
            break
        try:
            return apply_mutation(t, m), m
        except (ValidationError, ValueError):
            continue
    return t, Mutation(MutationKind.NOOP)


# --- search --------------------------------------------------------------------

@dataclass
class ArchiveEntry:
    test: TestDefinition
    result: TestResult
    fitness: Fitness
    key: tuple
    iteration: int
    parent: str | None = None
    mutation: Mutation | None = None


@dataclass
class SearchState:
    seed: ArchiveEntry
    incumbent: ArchiveEntry
    best: ArchiveEntry
    rng: np.random.Generator
    archive: list[ArchiveEntry] = field(default_factory=list)
    iteration: int = 0
    stale_count: int = 0
    restarts: int = 0
    incumbent_history: list[tuple] = field(default_factory=list)
    restarted_at: list[int] = field(default_factory=list)

    @property
    def min_fitness(self) -> float:
        return min(e.fitness.value for e in self.archive)


@dataclass
class GenerationResult:
    suite: TestSuite
    results: list[TestResult]
    states: list[SearchState]


Predicate = Callable[[TestResult], bool]


def evaluate(t: TestDefinition, spec: SubjectSpec) -> tuple[TestResult, Fitness]:
    (result, _log), = execute_many([t], spec)
    return result, fitness_of(result)


def _entries(tests, spec, workers, predicate, iteration, parents, mutations, out_dir=None):
    out = []
    for t, (result, log), parent, m in zip(tests, execute_many(tests, spec, workers), parents, mutations):
        if out_dir is not None:
            store_result(result, log, out_dir)
        fit = fitness_of(result)
        hit = bool(predicate(result)) if predicate is not None else False
        out.append(ArchiveEntry(t, result, fit, rank_key(fit, hit), iteration, parent, m))
    return out


def search(seed: TestDefinition, spec: SubjectSpec, config: SearchConfig = SearchConfig(),
           workers: int = 1, predicate: Predicate | None = None, out_dir=None) -> SearchState:
    """Run the (1+lambda) loop and return the final state with its full archive.

    Mutants are drawn single-threaded from the search RNG, evaluated as one
    batch (optionally in parallel), then reduced in order: the incumbent is
    replaced only by a strictly better-ranked mutant, and after
    ``restart_after`` iterations without improvement the search restarts from
    the seed. With ``out_dir`` every evaluation's log and result JSON are
    written there as soon as the batch completes.
    """
    family = seed.family
    rng = np.random.default_rng(seed.rng_seed if config.rng_seed is None else config.rng_seed)
    seed_test = replace(seed, name=f"{family}__0000")
    first, = _entries([seed_test], spec, workers, predicate, 0, [None], [None], out_dir)
    state = SearchState(first, first, first, rng, [first])
    for it in range(1, config.iterations + 1):
        parent = state.incumbent
        tests, mutations = [], []
        for _ in range(config.lam):
            child, m = mutate(parent.test, config, rng)
            tests.append(replace(child, name=f"{family}__{len(state.archive) + len(tests):04d}"))
            mutations.append(m)
        batch = _entries(tests, spec, workers, predicate, it, [parent.test.name] * len(tests), mutations,
                         out_dir)
        state.archive.extend(batch)
        state.iteration = it
        winner = min(batch, key=lambda e: e.key)
        if winner.key < state.incumbent.key:
            state.incumbent = winner
            state.stale_count = 0
        else:
            state.stale_count += 1
        if winner.key < state.best.key:
            state.best = winner
        state.incumbent_history.append(state.incumbent.key)
        if state.stale_count >= config.restart_after:
            state.incumbent = state.seed
            state.stale_count = 0
            state.restarts += 1
            state.restarted_at.append(it)
    return state


def state_to_suite(states: list[SearchState], name: str, spec: SubjectSpec, config: SearchConfig,
                   targeted: bool = False) -> GenerationResult:
    suite = TestSuite(name, generator={
        "subject_id": spec.subject_id,
        "seeds": [s.seed.test.family for s in states],
        "search": config.to_dict(),
        "rng_seeds": {s.seed.test.family: (s.seed.test.rng_seed if config.rng_seed is None else config.rng_seed)
                      for s in states},
        "targeted": targeted,
    })
    results = []
    for state in states:
        for e in state.archive:
            suite.members.append(SuiteMember(
                e.test.name, e.test, seed=e.test.family, iteration=e.iteration, parent=e.parent,
                mutation=None if e.mutation is None else e.mutation.to_dict(),
            ))
            results.append(e.result)
    return GenerationResult(suite, results, states)


def generate_suite(seeds: TestDefinition | list[TestDefinition], spec: SubjectSpec,
                   config: SearchConfig = SearchConfig(), workers: int = 1, name: str | None = None,
                   predicate: Predicate | None = None, out_dir=None) -> GenerationResult:
    """Search from each seed and return the union of all archives as one suite."""
    if isinstance(seeds, TestDefinition):
        seeds = [seeds]
    families = [s.family for s in seeds]
    if len(set(families)) != len(families):
        raise ValueError(f"seed families must be distinct, got {families}")
    states = [search(s, spec, config, workers, predicate, out_dir) for s in seeds]
    return state_to_suite(states, name or f"ts_{spec.subject_id}", spec, config, predicate is not None)


def targeted_generate(seeds, spec: SubjectSpec, predicate: Predicate, config: SearchConfig = SearchConfig(),
                      workers: int = 1, name: str | None = None, out_dir=None) -> GenerationResult:
    """Like generate_suite, but results satisfying ``predicate`` outrank all others."""
    return generate_suite(seeds, spec, config, workers, name, predicate, out_dir)


def outcome_predicate(outcome: str | None = None, max_gap: float | None = None) -> Predicate:
    """Predicate on a result's outcome category and/or minimum obstacle gap."""
    wanted = None if outcome is None else Outcome(outcome)

    def predicate(result: TestResult) -> bool:
        if wanted is not None and result.outcome is not wanted:
            return False
        if max_gap is not None and (result.metrics is None or not result.metrics.min_obstacle_gap < max_gap):
            return False
        return True

    return predicate
