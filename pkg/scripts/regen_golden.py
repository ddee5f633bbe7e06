"""Re-record the golden logs and plot under tests/golden.

Only run this after an intended behavior change, then review the diff.
"""

from pathlib import Path

from navtestgen.plotting import render_plot
from navtestgen.scenario import builtin_seed_text, parse_test_definition
from navtestgen.simulator import dumps_log, run_test
from navtestgen.subjects import make_subject

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main():
    corridor = parse_test_definition(builtin_seed_text("corridor"))
    log = run_test(corridor, make_subject("refnav_b", {}))
    (GOLDEN / "corridor_refnav_b.ndjson").write_text(dumps_log(log), encoding="utf-8")
    (GOLDEN / "corridor_refnav_b.svg").write_text(render_plot(log, corridor), encoding="utf-8")

    import sys
    sys.path.insert(0, str(GOLDEN.parent))
    from test_subjects import gap_scenario

    gap = gap_scenario(1.2, 0.0)
    log = run_test(gap, make_subject("refnav_a", {}))
    (GOLDEN / "refnav_a_gap_1p2.ndjson").write_text(dumps_log(log), encoding="utf-8")
    print(f"wrote goldens to {GOLDEN}")


if __name__ == "__main__":
    main()
