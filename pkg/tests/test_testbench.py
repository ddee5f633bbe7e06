import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import box, circle, scenario
from navtestgen.geometry import Pose2D
from navtestgen.safety import VelocityCommand
from navtestgen.scenario import builtin_seeds
from navtestgen.simulator import Event, EventKind, Sample, TrajectoryLog, dumps_log, loads_log
from navtestgen.subjects import SubjectSpec
from navtestgen.suite import EmptySuite, SuiteMember, TestSuite
from navtestgen.testbench import (
    METRIC_NAMES,
    OUTCOMES,
    EmptyResults,
    MalformedLog,
    Outcome,
    SuiteMismatch,
    SuiteReport,
    TestMetrics,
    TestResult,
    aggregate,
    classify_outcome,
    compare_reports,
    compute_metrics,
    execute,
    render_table,
    run_suite,
)

GOAL = (0.0, 10.0)
TEST = scenario(goal=GOAL, start=(0.0, 0.0, 0.0), goal_yaw=0.0, shapes=[box(-1.5, 5.0), box(1.5, 5.0)])
E = EventKind


def make_log(poses, events, ts=None):
    ts = ts or [0.05 * i for i in range(len(poses))]
    samples = [Sample(t, Pose2D(*p), VelocityCommand(), 1.0) for t, p in zip(ts, poses)]
    return TrajectoryLog(TEST.name, "fixture", 0.05, samples, [Event(ts[-1], k) for k in events])


NEAR = (0.1, 9.9, 0.0)
FIXTURES = [
    ("goal inside tolerance", [(0, 0, 0), NEAR], [E.GOAL_REACHED], Outcome.SUCCESS),
    ("goal exactly at position tolerance", [(0, 0, 0), (0.0, 9.75, 0.0)], [E.GOAL_REACHED], Outcome.SUCCESS),
    ("goal just outside position tolerance", [(0, 0, 0), (0.0, 9.75 - 1e-9, 0.0)], [E.GOAL_REACHED], MalformedLog),
    ("goal exactly at yaw tolerance", [(0, 0, 0), (0.0, 10.0, 0.35)], [E.GOAL_REACHED], Outcome.SUCCESS),
    ("goal outside yaw tolerance", [(0, 0, 0), (0.0, 10.0, 0.36)], [E.GOAL_REACHED], MalformedLog),
    ("waypoint then goal", [(0, 0, 0), (0, 5, 0), NEAR], [E.WAYPOINT_REACHED, E.GOAL_REACHED], Outcome.SUCCESS),
    ("safety stop", [(0, 0, 0), (0, 4, 0)], [E.SAFETY_STOP], Outcome.SAFETY_STOP),
    ("safety stop inside goal tolerance", [(0, 0, 0), (0.0, 9.9, 1.2)], [E.SAFETY_STOP], Outcome.SAFETY_STOP),
    ("timeout", [(0, 0, 0), (0, 3, 0)], [E.TIMEOUT], Outcome.TIMEOUT),
    ("timeout after waypoint", [(0, 0, 0), (0, 5, 0)], [E.WAYPOINT_REACHED, E.TIMEOUT], Outcome.TIMEOUT),
    ("collision", [(0, 0, 0), (0, 4.4, 0)], [E.COLLISION], Outcome.COLLISION),
    ("collision at the goal", [(0, 0, 0), NEAR], [E.COLLISION], Outcome.COLLISION),
    ("subject error", [(0, 0, 0)], [E.SUBJECT_ERROR], Outcome.ERROR),
    ("safety stop then goal", [(0, 0, 0), NEAR], [E.SAFETY_STOP, E.GOAL_REACHED], MalformedLog),
    ("event after goal", [(0, 0, 0), NEAR], [E.GOAL_REACHED, E.WAYPOINT_REACHED], MalformedLog),
    ("no terminal event", [(0, 0, 0), (0, 1, 0)], [E.WAYPOINT_REACHED], MalformedLog),
    ("two terminal events", [(0, 0, 0), (0, 1, 0)], [E.TIMEOUT, E.SAFETY_STOP], MalformedLog),
]


@pytest.mark.parametrize("name,poses,events,expected", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_outcome_fixture(name, poses, events, expected):
    log = make_log(poses, events)
    if isinstance(expected, Outcome):
        assert classify_outcome(log, TEST) is expected
    else:
        with pytest.raises(expected):
            classify_outcome(log, TEST)


def test_fixture_set_covers_every_category():
    covered = {f[3] for f in FIXTURES if isinstance(f[3], Outcome)}
    assert covered == set(OUTCOMES)
    assert len(FIXTURES) >= 12


def test_structurally_broken_logs_rejected():
    with pytest.raises(MalformedLog):
        classify_outcome(TrajectoryLog("x", "s", 0.05, [], [Event(0.0, E.TIMEOUT)]), TEST)
    with pytest.raises(MalformedLog):
        classify_outcome(make_log([(0, 0, 0), (0, 1, 0)], [E.TIMEOUT], ts=[0.0, 0.0]), TEST)


# --- metrics -------------------------------------------------------------------------

def test_hand_computed_metrics():
    test = scenario(goal=(10.0, 0.0), shapes=[box(5.0, 3.0), circle(5.0, -3.0, 1.0)])
    samples = [
        Sample(0.0, Pose2D(0, 0), VelocityCommand(), 0.9),
        Sample(0.05, Pose2D(3, 4), VelocityCommand(), 0.4),
        Sample(0.1, Pose2D(3, 0), VelocityCommand(), 0.7),
    ]
    log = TrajectoryLog(test.name, "fixture", 0.05, samples, [Event(0.1, E.TIMEOUT)])
    m = compute_metrics(log, test)
    # 3-4-5 triangle leg plus a 4 m drop; (3, 4) is 4 m off the x axis; the
    # box spans y >= 2.5 and the circle y <= -2.5, so the gap is 5 m.
    assert m == TestMetrics(min_obstacle_distance=0.4, min_obstacle_gap=5.0, path_length=9.0,
                            deviation=4.0, duration=0.1)


def test_stationary_and_single_obstacle_metrics():
    test = scenario(goal=(10.0, 0.0), shapes=[box(5.0, 3.0)])
    samples = [Sample(0.05 * i, Pose2D(0, 0), VelocityCommand(), 1.0) for i in range(4)]
    m = compute_metrics(TrajectoryLog(test.name, "s", 0.05, samples, [Event(0.15, E.TIMEOUT)]), test)
    assert m.path_length == 0.0 and m.deviation == 0.0
    assert m.min_obstacle_gap == math.inf
    assert m.to_dict()["min_obstacle_gap"] is None
    assert TestMetrics.from_dict(m.to_dict()) == m


def test_metrics_recompute_after_log_round_trip():
    result, log = execute(builtin_seeds()[1], SubjectSpec.of("refnav_a"))
    again = loads_log(dumps_log(log))
    assert compute_metrics(again, builtin_seeds()[1]) == result.metrics


# --- suite execution -------------------------------------------------------------------

def test_worker_count_does_not_change_results():
    suite = TestSuite.of_tests("seeds", builtin_seeds())
    spec = SubjectSpec.of("refnav_b")
    one = run_suite(suite, spec, workers=1)
    four = run_suite(suite, spec, workers=4)
    assert [r.to_dict() for r in one] == [r.to_dict() for r in four]
    assert aggregate(one, "seeds").to_json() == aggregate(four, "seeds").to_json()


def test_unloadable_member_becomes_error():
    seed = builtin_seeds()[0]
    suite = TestSuite("s", [SuiteMember(seed.name, seed), SuiteMember("broken__0001", None, load_error="bad yaml")])
    results = run_suite(suite, SubjectSpec.of("refnav_a"))
    assert [r.outcome for r in results][1] is Outcome.ERROR
    assert results[1].detail == "bad yaml"
    assert aggregate(results).overall["Error"] == 50.0


def test_empty_suite_and_results_rejected():
    with pytest.raises(EmptySuite):
        run_suite(TestSuite("empty"), SubjectSpec.of("refnav_a"))
    with pytest.raises(EmptyResults):
        aggregate([])


# --- aggregation -----------------------------------------------------------------------

def result(name, outcome, d=0.5):
    return TestResult(name, "s", outcome, TestMetrics(d, 1.0, 10.0, 0.1, 20.0))


def test_aggregate_small_examples():
    rep = aggregate([result("a__0", Outcome.SUCCESS)] * 4)
    assert rep.overall["Success"] == 100.0
    assert all(v == 0.0 for k, v in rep.overall.items() if k != "Success")
    rep = aggregate([result("a__0", Outcome.SUCCESS), result("a__1", Outcome.SAFETY_STOP),
                     result("b__0", Outcome.TIMEOUT)])
    for k in ("Success", "SafetyStop", "Timeout"):
        assert rep.overall[k] == pytest.approx(33.3, abs=0.1)
    assert rep.families["a"]["Success"] == 50.0
    assert rep.family_counts == {"a": 2, "b": 1}


def test_report_json_round_trip_and_table():
    rep = aggregate([result("boxes1__0000", Outcome.SUCCESS), result("corridor__0001", Outcome.SAFETY_STOP)], "ts")
    assert SuiteReport.from_json(rep.to_json()) == rep
    table = render_table([rep])
    assert "boxes1 Succ." in table and "corridor S-Stop" in table and "overall Succ." in table


outcomes = st.sampled_from(OUTCOMES)
metric = st.one_of(st.floats(0, 100, allow_nan=False), st.just(math.inf))
results = st.lists(
    st.builds(lambda fam, i, o, ms: TestResult(f"{fam}__{i:04d}", "s", o, TestMetrics(*ms)),
              st.sampled_from(["boxes1", "corridor", "l_corridor"]), st.integers(0, 9999), outcomes,
              st.tuples(*[metric] * len(METRIC_NAMES))),
    min_size=1, max_size=60)


@settings(max_examples=300, deadline=None)
@given(results)
def test_report_invariants(rs):
    rep = aggregate(rs)
    assert abs(sum(rep.overall.values()) - 100.0) <= 0.1
    for fam in rep.families.values():
        assert abs(sum(fam.values()) - 100.0) <= 0.1
    assert sum(rep.family_counts.values()) == rep.total == len(rs)
    for name in METRIC_NAMES:
        m = rep.metrics[name]
        if m is not None:
            assert m["min"] <= m["mean"] <= m["max"]


# --- comparison -------------------------------------------------------------------------

def report(subject, succ, stop, members=("x__0001",)):
    other = round(100.0 - succ - stop, 6)
    cats = {"Success": succ, "SafetyStop": stop, "Timeout": other, "Collision": 0.0, "Error": 0.0}
    return SuiteReport("ts_a", subject, 429, cats, {"x": dict(cats)}, {"x": 429},
                       {n: None for n in METRIC_NAMES}, list(members))


def test_compare_signed_deltas():
    c = compare_reports(report("A", 40.3, 42.2), report("B", 71.2, 7.7))
    row = c.row("overall")
    assert row.success_delta == pytest.approx(30.9, abs=1e-9)
    assert row.safety_stop_delta == pytest.approx(-34.5, abs=1e-9)
    assert "+30.9" in c.to_text() and "-34.5" in c.to_text()


def test_compare_identical_and_mismatched():
    a = report("A", 50.0, 20.0)
    assert all(r.success_delta == 0 and r.safety_stop_delta == 0 for r in compare_reports(a, a).rows)
    with pytest.raises(SuiteMismatch):
        compare_reports(a, report("B", 50.0, 20.0, members=("y__0001",)))
