"""Full comparative protocol with the bundled seeds.

1. generate a suite against refnav_a
2. rerun that suite on refnav_b
3. generate a suite tailored to refnav_b
4. print the comparison table and write a bar chart

    python3 scripts/pilot.py --out runs/pilot [--workers N]
"""

import argparse
import time
from pathlib import Path

from navtestgen.generator import SearchConfig, generate_suite
from navtestgen.plotting import render_comparison
from navtestgen.scenario import builtin_seeds
from navtestgen.subjects import SubjectSpec
from navtestgen.suite import write_suite
from navtestgen.testbench import aggregate, compare_reports, default_workers, render_table, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/pilot")
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--iterations", type=int, default=SearchConfig.iterations)
    args = ap.parse_args()
    out = Path(args.out)
    config = SearchConfig(iterations=args.iterations)
    a, b = SubjectSpec.of("refnav_a"), SubjectSpec.of("refnav_b")

    t0 = time.perf_counter()
    gen_a = generate_suite(builtin_seeds(), a, config, args.workers, "ts_refnav_a", out_dir=out / "ts_refnav_a")
    write_suite(gen_a.suite, out / "ts_refnav_a")
    print(f"generated {len(gen_a.suite)} tests against refnav_a in {time.perf_counter() - t0:.0f} s")

    t0 = time.perf_counter()
    b_results = run_suite(gen_a.suite, b, args.workers, out / "refnav_b_on_ts_refnav_a")
    print(f"reran on refnav_b in {time.perf_counter() - t0:.0f} s")

    t0 = time.perf_counter()
    gen_b = generate_suite(builtin_seeds(), b, config, args.workers, "ts_refnav_b", out_dir=out / "ts_refnav_b")
    write_suite(gen_b.suite, out / "ts_refnav_b")
    print(f"generated {len(gen_b.suite)} tests against refnav_b in {time.perf_counter() - t0:.0f} s\n")

    reports = [aggregate(gen_a.results, "ts_refnav_a"),
               aggregate(b_results, "ts_refnav_a", b.subject_id),
               aggregate(gen_b.results, "ts_refnav_b")]
    for rep, name in zip(reports, ("refnav_a_on_ts_refnav_a", "refnav_b_on_ts_refnav_a", "refnav_b_on_ts_refnav_b")):
        (out / name).mkdir(parents=True, exist_ok=True)
        (out / name / "report.json").write_text(rep.to_json(), encoding="utf-8")
    print(render_table(reports))

    comparison = compare_reports(reports[0], reports[1])
    print(comparison.to_text())
    (out / "comparison.svg").write_text(render_comparison(comparison), encoding="utf-8")
    for s in gen_a.states:
        print(f"{s.seed.test.family:11s} seed fitness {s.seed.fitness.value:.3f}  lowest {s.min_fitness:.3f}  "
              f"best {s.best.fitness.value:.3f} ({s.best.fitness.outcome_at_eval.value})  restarts {s.restarts}")


if __name__ == "__main__":
    main()
