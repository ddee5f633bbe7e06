import math
import sys
from pathlib import Path

import pytest

from builders import RecordingSubject, box, scenario
from navtestgen.geometry import Pose2D
from navtestgen.scenario import RobotConfig
from navtestgen.simulator import EventKind, dumps_log, loads_log, run_test
from navtestgen.subjects import (
    ExternalSubject,
    GridReplanner,
    PotentialFieldPlanner,
    SensorSnapshot,
    SubjectError,
    SubjectSpec,
    UnknownSubject,
    make_subject,
)

HERE = Path(__file__).parent
STRAIGHT = f"{sys.executable} {HERE / 'fixtures' / 'straight_subject.py'}"
GOLDEN = HERE / "golden" / "refnav_a_gap_1p2.ndjson"
ROBOT = RobotConfig()


def snap(pose=(0.0, 0.0, 0.0), wp=(5.0, 0.0, 0.0), obstacles=(), is_goal=True, t=0.0):
    return SensorSnapshot(t, Pose2D(*pose), Pose2D(*wp), is_goal, tuple(obstacles))


def gap_scenario(gap=1.2, start_x=0.0):
    h = gap / 2 + 0.5
    return scenario(goal=(0.0, 10.0), start=(start_x, 0.0, math.pi / 2), goal_yaw=math.pi / 2,
                    shapes=[box(-h, 5.0), box(h, 5.0)], name=f"gap_{gap}")


@pytest.mark.parametrize("kind", ["refnav_a", "refnav_b"])
def test_unobstructed_command_points_forward(kind):
    subject = make_subject(kind)
    subject.reset(scenario(goal=(5.0, 0.0)))
    cmd = subject.plan_step(snap(), ROBOT)
    assert cmd.vx > 0
    assert cmd.vy == pytest.approx(0.0, abs=1e-9)
    assert cmd.wyaw == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("kind", ["refnav_a", "refnav_b"])
def test_zero_command_inside_goal_tolerance(kind):
    subject = make_subject(kind)
    subject.reset(scenario(goal=(5.0, 0.0)))
    cmd = subject.plan_step(snap(pose=(4.9, 0.05, 0.1)), ROBOT)
    assert cmd.is_zero()


@pytest.mark.parametrize("kind", ["refnav_a", "refnav_b"])
def test_obstacle_free_ten_metre_mission_succeeds(kind):
    log = run_test(scenario(goal=(0.0, 10.0), start=(0.0, 0.0, math.pi / 2), goal_yaw=math.pi / 2),
                   make_subject(kind))
    assert log.terminal_event is EventKind.GOAL_REACHED


@pytest.mark.parametrize("kind", ["refnav_a", "refnav_b"])
def test_identical_snapshots_give_identical_commands(kind):
    test = gap_scenario(1.6, 0.1)
    recorder = RecordingSubject(make_subject(kind))
    run_test(test, recorder)
    replay = make_subject(kind)
    replay.reset(test)
    again = [replay.plan_step(s, test.robot) for s in recorder.snapshots]
    first = make_subject(kind)
    first.reset(test)
    original = [first.plan_step(s, test.robot) for s in recorder.snapshots]
    assert again == original


def test_make_subject_kinds():
    assert isinstance(make_subject("refnav_a"), PotentialFieldPlanner)
    assert isinstance(make_subject("refnav_b", {"resolution": 0.2}), GridReplanner)
    assert isinstance(make_subject("external", {"cmd": STRAIGHT}), ExternalSubject)
    with pytest.raises(UnknownSubject):
        make_subject("refnav_z")
    with pytest.raises(UnknownSubject):
        SubjectSpec.of("nope")


def test_subject_spec_is_hashable_and_rebuilds():
    spec = SubjectSpec.of("refnav_b", {"lookahead": 0.8})
    assert hash(spec) == hash(SubjectSpec.of("refnav_b", {"lookahead": 0.8}))
    assert spec.build().lookahead == 0.8


def test_refnav_b_plans_around_a_wall():
    test = scenario(goal=(6.0, 0.0), shapes=[box(3.0, 0.0, 0.0, 0.4, 3.0)])
    log = run_test(test, make_subject("refnav_b"))
    assert log.terminal_event is EventKind.GOAL_REACHED
    assert max(abs(s.pose.y) for s in log.samples) > 1.5


def test_refnav_b_waits_when_no_path_exists():
    # A closed box around the goal leaves the grid search without a route.
    walls = [box(6.0, 1.5, 0.0, 3.4, 0.2), box(6.0, -1.5, 0.0, 3.4, 0.2),
             box(4.4, 0.0, 0.0, 0.2, 3.2), box(7.6, 0.0, 0.0, 0.2, 3.2)]
    subject = make_subject("refnav_b")
    test = scenario(goal=(6.0, 0.0), shapes=walls, budget=5.0)
    subject.reset(test)
    cmd = subject.plan_step(snap(wp=(6.0, 0.0), obstacles=[w for w in walls]), ROBOT)
    assert cmd.is_zero()


# --- designed weakness of RefNav-A ------------------------------------------------

def lateral_flips(log) -> int:
    vy = [s.command.vy for s in log.samples]
    return sum(1 for a, b in zip(vy, vy[1:]) if a * b < 0 and min(abs(a), abs(b)) > 1e-2)


def test_refnav_a_oscillates_in_narrow_gap_golden():
    log = run_test(gap_scenario(1.2), make_subject("refnav_a"))
    assert lateral_flips(log) >= 5
    assert log.terminal_event is not EventKind.GOAL_REACHED
    golden = loads_log(GOLDEN.read_text(encoding="utf-8"))
    assert log == golden
    assert dumps_log(log) == GOLDEN.read_text(encoding="utf-8")


def test_refnav_a_passes_wide_gap_without_oscillation():
    log = run_test(gap_scenario(2.0), make_subject("refnav_a"))
    assert log.terminal_event is EventKind.GOAL_REACHED
    assert lateral_flips(log) == 0


def test_refnav_b_passes_the_narrow_gap():
    log = run_test(gap_scenario(1.2), make_subject("refnav_b"))
    assert log.terminal_event is EventKind.GOAL_REACHED


# --- external protocol ---------------------------------------------------------------

def test_external_subject_drives_to_goal():
    subject = make_subject("external", {"cmd": STRAIGHT})
    try:
        log = run_test(scenario(goal=(3.0, 0.0)), subject)
    finally:
        subject.close()
    assert log.terminal_event is EventKind.GOAL_REACHED
    assert log.subject_id == "external"


def test_external_error_reply_becomes_subject_error():
    subject = make_subject("external", {"cmd": STRAIGHT + " --fail-after 4"})
    try:
        log = run_test(scenario(goal=(3.0, 0.0)), subject)
    finally:
        subject.close()
    assert log.terminal_event is EventKind.SUBJECT_ERROR
    assert "gave up" in log.events[-1].detail


def test_external_crash_becomes_subject_error():
    subject = make_subject("external", {"cmd": STRAIGHT + " --crash-after 2"})
    try:
        log = run_test(scenario(goal=(3.0, 0.0)), subject)
    finally:
        subject.close()
    assert log.terminal_event is EventKind.SUBJECT_ERROR


def test_external_missing_binary_is_subject_error():
    subject = ExternalSubject("/nonexistent/planner")
    with pytest.raises(SubjectError):
        subject.reset(scenario())
