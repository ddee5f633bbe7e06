"""Execute tests and suites, classify outcomes, compute and aggregate metrics."""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from navtestgen.geometry import normalize_angle, obstacle_gap
from navtestgen.scenario import TestDefinition, family_of
from navtestgen.simulator import (
    TERMINAL_EVENTS,
    EventKind,
    TrajectoryLog,
    run_test,
    write_log,
)
from navtestgen.subjects import SubjectSpec
from navtestgen.suite import EmptySuite, TestSuite

REPORT_SCHEMA = 1
WORKERS_ENV = "NAVTESTGEN_WORKERS"


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    SAFETY_STOP = "SafetyStop"
    TIMEOUT = "Timeout"
    COLLISION = "Collision"
    ERROR = "Error"


OUTCOMES = tuple(Outcome)
METRIC_NAMES = ("min_obstacle_distance", "min_obstacle_gap", "path_length", "deviation", "duration")

_TERMINAL_OUTCOME = {
    EventKind.SAFETY_STOP: Outcome.SAFETY_STOP,
    EventKind.TIMEOUT: Outcome.TIMEOUT,
    EventKind.COLLISION: Outcome.COLLISION,
    EventKind.SUBJECT_ERROR: Outcome.ERROR,
}


class MalformedLog(ValueError):
    pass


class EmptyResults(ValueError):
    pass


class SuiteMismatch(ValueError):
    pass


def check_log(log: TrajectoryLog) -> None:
    """Raise MalformedLog unless the log is complete and internally consistent."""
    if not log.samples:
        raise MalformedLog(f"{log.test_name}: log has no samples")
    ts = [s.t for s in log.samples]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise MalformedLog(f"{log.test_name}: sample times are not strictly increasing")
    terminal = [i for i, e in enumerate(log.events) if e.kind in TERMINAL_EVENTS]
    if len(terminal) != 1 or terminal[0] != len(log.events) - 1:
        raise MalformedLog(f"{log.test_name}: expected exactly one terminal event, last; "
                           f"got {[e.kind.value for e in log.events]}")


def classify_outcome(log: TrajectoryLog, test: TestDefinition) -> Outcome:
    """Map a complete log to exactly one outcome category.

    A terminal GoalReached whose final pose misses either goal tolerance is
    inconsistent and rejected as MalformedLog, as is any event after a
    terminal one (e.g. a SafetyStop followed by GoalReached).
    """
    check_log(log)
    terminal = log.events[-1].kind
    if terminal is not EventKind.GOAL_REACHED:
        return _TERMINAL_OUTCOME[terminal]
    goal, pose, robot = test.mission.goal, log.final_pose, test.robot
    if math.hypot(goal.x - pose.x, goal.y - pose.y) > robot.goal_position_tolerance:
        raise MalformedLog(f"{log.test_name}: GoalReached outside the position tolerance")
    if abs(normalize_angle(goal.yaw - pose.yaw)) > robot.goal_yaw_tolerance:
        raise MalformedLog(f"{log.test_name}: GoalReached outside the yaw tolerance")
    return Outcome.SUCCESS


@dataclass(frozen=True)
class TestMetrics:
    __test__ = False

    min_obstacle_distance: float
    min_obstacle_gap: float
    path_length: float
    deviation: float
    duration: float

    def to_dict(self) -> dict[str, float | None]:
        return {k: (None if math.isinf(v) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "TestMetrics":
        return cls(**{k: (math.inf if d[k] is None else d[k]) for k in METRIC_NAMES})


def min_gap(test: TestDefinition) -> float:
    shapes = test.shapes()
    best = math.inf
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            best = min(best, obstacle_gap(shapes[i], shapes[j]))
    return best


def _point_segment(px, py, ax, ay, bx, by) -> float:
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    u = 0.0 if L2 == 0.0 else min(1.0, max(0.0, ((px - ax) * vx + (py - ay) * vy) / L2))
    return math.hypot(px - (ax + u * vx), py - (ay + u * vy))


def polyline_distance(x: float, y: float, points) -> float:
    return min(_point_segment(x, y, a.x, a.y, b.x, b.y) for a, b in zip(points, points[1:]))


def compute_metrics(log: TrajectoryLog, test: TestDefinition) -> TestMetrics:
    check_log(log)
    poses = [s.pose for s in log.samples]
    line = test.mission.polyline()
    return TestMetrics(
        min_obstacle_distance=min(s.min_obstacle_distance for s in log.samples),
        min_obstacle_gap=min_gap(test),
        path_length=sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(poses, poses[1:])),
        deviation=max(polyline_distance(p.x, p.y, line) for p in poses),
        duration=log.samples[-1].t,
    )


@dataclass
class TestResult:
    __test__ = False

    test_name: str
    subject_id: str
    outcome: Outcome
    metrics: TestMetrics | None
    log_path: str | None = None
    detail: str = ""

    @property
    def family(self) -> str:
        return family_of(self.test_name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "test_name": self.test_name,
            "subject_id": self.subject_id,
            "outcome": self.outcome.value,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "log_path": self.log_path,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestResult":
        metrics = None if d.get("metrics") is None else TestMetrics.from_dict(d["metrics"])
        return cls(d["test_name"], d["subject_id"], Outcome(d["outcome"]), metrics,
                   d.get("log_path"), d.get("detail", ""))


def result_json(result: TestResult) -> str:
    return json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"


def execute(test: TestDefinition, spec: SubjectSpec) -> tuple[TestResult, TrajectoryLog]:
    """Run one test on a fresh subject and classify it."""
    subject = spec.build()
    try:
        log = run_test(test, subject)
    finally:
        subject.close()
    outcome = classify_outcome(log, test)
    detail = log.events[-1].detail if outcome is Outcome.ERROR else ""
    return TestResult(test.name, spec.subject_id, outcome, compute_metrics(log, test), detail=detail), log


def _job(args):
    test, spec = args
    return execute(test, spec)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def execute_many(tests: list[TestDefinition], spec: SubjectSpec, workers: int = 1):
    """Run tests in order, optionally fanned out over a process pool; results keep input order."""
    jobs = [(t, spec) for t in tests]
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_job, jobs))


def store_result(result: TestResult, log: TrajectoryLog | None, out_dir) -> None:
    out = Path(out_dir)
    if log is not None:
        (out / "logs").mkdir(parents=True, exist_ok=True)
        result.log_path = f"logs/{result.test_name}.ndjson"
        write_log(log, out / result.log_path)
    (out / "results").mkdir(parents=True, exist_ok=True)
    (out / "results" / f"{result.test_name}.json").write_text(result_json(result), encoding="utf-8")


def run_suite(suite: TestSuite, spec: SubjectSpec, workers: int = 1, out_dir=None) -> list[TestResult]:
    """Execute every member of ``suite``; one result per member, in suite order.

    Members that could not be loaded become Error results; the suite always
    completes. With ``out_dir`` the logs and per-test result JSON are written there.
    """
    if not suite.members:
        raise EmptySuite(f"suite {suite.name!r} has no members")
    runnable = [m for m in suite.members if m.test is not None]
    executed = iter(execute_many([m.test for m in runnable], spec, workers))
    results = []
    for m in suite.members:
        if m.test is None:
            result, log = TestResult(m.name, spec.subject_id, Outcome.ERROR, None, detail=m.load_error), None
        else:
            result, log = next(executed)
            result.test_name = m.name
        if out_dir is not None:
            store_result(result, log, out_dir)
        results.append(result)
    return results


# --- aggregation ---------------------------------------------------------------

def _percentages(results: list[TestResult]) -> dict[str, float]:
    n = len(results)
    return {o.value: 100.0 * sum(r.outcome is o for r in results) / n for o in OUTCOMES}


@dataclass
class SuiteReport:
    suite: str
    subject_id: str
    total: int
    overall: dict[str, float]
    families: dict[str, dict[str, float]]
    family_counts: dict[str, int]
    metrics: dict[str, dict[str, float] | None]
    members: list[str] = field(default_factory=list)
    schema: int = REPORT_SCHEMA

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SuiteReport":
        d = json.loads(text)
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(**d)

    def success(self, family: str | None = None) -> float:
        return (self.overall if family is None else self.families[family])[Outcome.SUCCESS.value]

    def safety_stop(self, family: str | None = None) -> float:
        return (self.overall if family is None else self.families[family])[Outcome.SAFETY_STOP.value]


def aggregate(results: list[TestResult], suite: str = "", subject_id: str | None = None) -> SuiteReport:
    """Outcome percentages overall and per scenario family, plus min/max/mean per metric."""
    if not results:
        raise EmptyResults("cannot aggregate an empty result list")
    families: dict[str, list[TestResult]] = {}
    for r in results:
        families.setdefault(r.family, []).append(r)
    metrics: dict[str, dict[str, float] | None] = {}
    for name in METRIC_NAMES:
        values = [getattr(r.metrics, name) for r in results if r.metrics is not None]
        values = [v for v in values if math.isfinite(v)]
        if values:
            lo, hi = min(values), max(values)
            mean = min(max(math.fsum(values) / len(values), lo), hi)
            metrics[name] = {"min": lo, "max": hi, "mean": mean}
        else:
            metrics[name] = None
    if subject_id is None:
        subject_id = results[0].subject_id
    return SuiteReport(
        suite=suite,
        subject_id=subject_id,
        total=len(results),
        overall=_percentages(results),
        families={f: _percentages(rs) for f, rs in sorted(families.items())},
        family_counts={f: len(rs) for f, rs in sorted(families.items())},
        metrics=metrics,
        members=[r.test_name for r in results],
    )


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()
             for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_table(reports: list[SuiteReport]) -> str:
    """Side-by-side Succ./S-Stop columns per scenario family plus overall, one row per report."""
    families = sorted({f for r in reports for f in r.families})
    head = ["subject", "suite (#)"]
    for f in [*families, "overall"]:
        head += [f"{f} Succ.", f"{f} S-Stop"]
    rows = [head]
    for rep in reports:
        row = [rep.subject_id, f"{rep.suite} ({rep.total})"]
        for f in families:
            if f in rep.families:
                row += [f"{rep.success(f):.1f}%", f"{rep.safety_stop(f):.1f}%"]
            else:
                row += ["-", "-"]
        row += [f"{rep.success():.1f}%", f"{rep.safety_stop():.1f}%"]
        rows.append(row)
    out = [_table(rows), ""]
    detail = [["subject", "suite (#)", *(o.value for o in OUTCOMES)]]
    for rep in reports:
        detail.append([rep.subject_id, f"{rep.suite} ({rep.total})",
                       *(f"{rep.overall[o.value]:.1f}%" for o in OUTCOMES)])
    out += [_table(detail), ""]
    for rep in reports:
        stats = [["metric", "", "min", "mean", "max"]]
        for name in METRIC_NAMES:
            m = rep.metrics[name]
            stats.append([name, ""] + (["-"] * 3 if m is None else [f"{m[k]:.3f}" for k in ("min", "mean", "max")]))
        out += [f"{rep.subject_id} on {rep.suite}:", _table(stats), ""]
    return "\n".join(out).rstrip() + "\n"


# --- comparison ----------------------------------------------------------------

@dataclass
class ComparisonRow:
    scenario: str
    success_a: float
    success_b: float
    safety_stop_a: float
    safety_stop_b: float

    @property
    def success_delta(self) -> float:
        return self.success_b - self.success_a

    @property
    def safety_stop_delta(self) -> float:
        return self.safety_stop_b - self.safety_stop_a


@dataclass
class Comparison:
    subject_a: str
    subject_b: str
    rows: list[ComparisonRow]

    def row(self, scenario: str) -> ComparisonRow:
        return next(r for r in self.rows if r.scenario == scenario)

    def to_text(self) -> str:
        rows = [["scenario", "", f"Succ. {self.subject_a}", f"Succ. {self.subject_b}", "delta",
                 f"S-Stop {self.subject_a}", f"S-Stop {self.subject_b}", "delta"]]
        for r in self.rows:
            rows.append([r.scenario, "", f"{r.success_a:.1f}%", f"{r.success_b:.1f}%",
                         f"{r.success_delta:+.1f}", f"{r.safety_stop_a:.1f}%",
                         f"{r.safety_stop_b:.1f}%", f"{r.safety_stop_delta:+.1f}"])
        return _table(rows) + "\n"


def compare_reports(a: SuiteReport, b: SuiteReport) -> Comparison:
    """Per-scenario success and safety-stop deltas (b minus a) over the same suite."""
    if sorted(a.members) != sorted(b.members):
        raise SuiteMismatch(f"reports cover different test sets ({a.total} vs {b.total} members)")
    rows = [ComparisonRow(f, a.success(f), b.success(f), a.safety_stop(f), b.safety_stop(f))
            for f in sorted(a.families)]
    rows.append(ComparisonRow("overall", a.success(), b.success(), a.safety_stop(), b.safety_stop()))
    return Comparison(a.subject_id, b.subject_id, rows)
