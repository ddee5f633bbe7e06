import json
import sys
from pathlib import Path

import pytest
import yaml

from navtestgen.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main

HERE = Path(__file__).parent
STRAIGHT = f"{sys.executable} {HERE / 'fixtures' / 'straight_subject.py'}"


@pytest.fixture(scope="module")
def seeds(tmp_path_factory):
    out = tmp_path_factory.mktemp("seeds")
    assert main(["seeds", "--out", str(out), "--force"]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def small_suite(seeds, tmp_path_factory):
    out = tmp_path_factory.mktemp("gen") / "suite"
    code = main(["generate", str(seeds / "boxes1.yaml"), str(seeds / "cylinders.yaml"), "--subject", "refnav_a",
                 "--iterations", "2", "--lambda", "2", "--rng-seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    return out


def test_seeds_written(seeds):
    assert sorted(p.name for p in seeds.iterdir()) == [
        "boxes1.yaml", "boxes2.yaml", "corridor.yaml", "cylinders.yaml", "l_corridor.yaml"]


def test_run_writes_log_result_and_plot(seeds, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(seeds / "corridor.yaml"), "--subject", "refnav_b", "--out", str(out)]) == EXIT_OK
    assert "corridor refnav_b Success" in capsys.readouterr().out
    assert (out / "logs" / "corridor.ndjson").exists()
    assert json.loads((out / "results" / "corridor.json").read_text())["outcome"] == "Success"
    assert "footprint-trace" in (out / "plots" / "corridor.svg").read_text()


def test_existing_output_needs_force(seeds, tmp_path):
    out = tmp_path / "run"
    args = ["run", str(seeds / "boxes1.yaml"), "--subject", "refnav_a", "--out", str(out)]
    assert main(args) == EXIT_OK
    (out / "keep.txt").write_text("mine")
    assert main(args) == EXIT_INVALID
    assert main(args + ["--force"]) == EXIT_OK
    assert (out / "keep.txt").read_text() == "mine"


def test_generate_layout(small_suite):
    manifest = yaml.safe_load((small_suite / "manifest.yaml").read_text())
    assert manifest["count"] == 2 * (1 + 2 * 2) == len(manifest["members"])
    for m in manifest["members"]:
        assert (small_suite / m["file"]).exists()
        assert (small_suite / "logs" / f"{m['name']}.ndjson").exists()
        assert (small_suite / "results" / f"{m['name']}.json").exists()
    report = json.loads((small_suite / "report.json").read_text())
    assert report["total"] == 10
    assert "overall Succ." in (small_suite / "report.txt").read_text()


def test_rerun_is_deterministic(small_suite, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["rerun", str(small_suite), "--subject", "refnav_a", "--out", str(a)]) == EXIT_OK
    assert main(["rerun", str(small_suite), "--subject", "refnav_a", "--out", str(b), "--workers", "2"]) == EXIT_OK
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    # Re-executing the generating subject reproduces the generation report.
    assert (a / "report.json").read_bytes() == (small_suite / "report.json").read_bytes()


def test_corrupted_member_reported_as_error(small_suite, tmp_path):
    import shutil
    copy = tmp_path / "suite"
    shutil.copytree(small_suite, copy)
    victim = sorted((copy / "tests").iterdir())[1]
    victim.write_text("schema: 1\nname: [unclosed\n")
    out = tmp_path / "rerun"
    assert main(["rerun", str(copy), "--subject", "refnav_b", "--out", str(out)]) == EXIT_OK
    result = json.loads((out / "results" / f"{victim.stem}.json").read_text())
    assert result["outcome"] == "Error"
    assert json.loads((out / "report.json").read_text())["overall"]["Error"] == pytest.approx(10.0)


def test_report_and_compare(small_suite, tmp_path, capsys):
    b = tmp_path / "b"
    assert main(["rerun", str(small_suite), "--subject", "refnav_b", "--out", str(b)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", str(small_suite), str(b)]) == EXIT_OK
    table = capsys.readouterr().out
    assert "refnav_a" in table and "refnav_b" in table
    chart = tmp_path / "cmp.svg"
    assert main(["compare", str(small_suite), str(b), "--out", str(chart)]) == EXIT_OK
    assert "overall" in capsys.readouterr().out
    assert chart.read_text().startswith("<?xml")


def test_compare_mismatched_suites(small_suite, seeds, tmp_path):
    other = tmp_path / "other"
    assert main(["generate", str(seeds / "boxes2.yaml"), "--subject", "refnav_a", "--iterations", "0",
                 "--out", str(other)]) == EXIT_OK
    assert main(["compare", str(small_suite), str(other)]) == EXIT_INVALID


def test_plot_command(small_suite, tmp_path):
    out = tmp_path / "p.svg"
    code = main(["plot", str(small_suite / "logs" / "boxes1__0000.ndjson"),
                 str(small_suite / "tests" / "boxes1__0000.yaml"), "--out", str(out)])
    assert code == EXIT_OK and "min distance" in out.read_text()


def test_external_subject_via_cli(seeds, tmp_path):
    out = tmp_path / "ext"
    code = main(["run", str(seeds / "boxes1.yaml"), "--subject", "external", "--cmd", STRAIGHT, "--out", str(out)])
    assert code == EXIT_OK


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["run", "missing.yaml", "--subject", "refnav_a", "--out", "x"],
    ["run", "{seeds}/boxes1.yaml", "--subject", "refnav_q", "--out", "x"],
    ["run", "{seeds}/boxes1.yaml", "--subject", "external", "--out", "x"],
    ["run", "{seeds}/boxes1.yaml", "--subject", "refnav_a", "--param", "nokey", "--out", "x"],
    ["run", "{seeds}/boxes1.yaml", "--subject", "refnav_a", "--param", "speed=2", "--out", "x"],
    ["generate", "{seeds}/boxes1.yaml", "--subject", "refnav_a", "--lambda", "0", "--out", "x"],
    ["generate", "{seeds}/boxes1.yaml", "--subject", "refnav_a", "--workers", "0", "--out", "x"],
    ["rerun", "{seeds}", "--subject", "refnav_a", "--out", "x"],
])
def test_invalid_input_exit_code(argv, seeds, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = [a.replace("{seeds}", str(seeds)) for a in argv]
    assert main(argv) == EXIT_INVALID


def test_bad_yaml_is_invalid_input(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema: 1\nname: x\n")
    assert main(["run", str(bad), "--subject", "refnav_a", "--out", str(tmp_path / "o")]) == EXIT_INVALID


def test_execution_failure_exit_code(seeds, tmp_path, monkeypatch):
    import navtestgen.cli as cli

    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "execute", boom)
    assert main(["run", str(seeds / "boxes1.yaml"), "--subject", "refnav_a", "--out", str(tmp_path / "o")]) == EXIT_FAILED
