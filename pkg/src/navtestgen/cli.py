"""Command line entry point: seeds, run, generate, rerun, report, compare, plot.

Exit codes: 0 success, 1 validation error (bad input, schema, mismatched
suites, existing output without --force), 2 execution error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import shutil
import sys
import time
from pathlib import Path

import yaml

from navtestgen.generator import SearchConfig, generate_suite, outcome_predicate
from navtestgen.plotting import render_comparison, render_plot
from navtestgen.scenario import (
    SEED_NAMES,
    SchemaError,
    ValidationError,
    builtin_seed_text,
    load_test_definition,
)
from navtestgen.simulator import LogFormatError, read_log
from navtestgen.subjects import SUBJECT_KINDS, SubjectSpec, UnknownSubject
from navtestgen.suite import EmptySuite, load_suite, write_suite
from navtestgen.testbench import (
    SuiteMismatch,
    SuiteReport,
    aggregate,
    compare_reports,
    default_workers,
    execute,
    render_table,
    run_suite,
    store_result,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2
_OWNED = ("tests", "logs", "results", "plots", "manifest.yaml", "report.json", "report.txt", "meta.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _prepare_dir(path: str, force: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise UsageError(f"output directory {out} is not empty; pass --force to overwrite")
        for name in _OWNED:
            p = out / name
            if p.is_dir():
                shutil.rmtree(p)
            elif p.exists():
                p.unlink()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _prepare_file(path: str, force: bool) -> Path:
    out = Path(path)
    if out.exists() and not force:
        raise UsageError(f"{out} exists; pass --force to overwrite")
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, started: float, argv, **extra) -> None:
    meta = {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "elapsed_s": round(time.time() - started, 3), "argv": list(argv), **extra}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _subject(args) -> SubjectSpec:
    params = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        params[key] = yaml.safe_load(value)
    if args.subject == "external":
        if not args.cmd:
            raise UsageError("--subject external requires --cmd")
        params["cmd"] = args.cmd
    elif args.cmd:
        raise UsageError("--cmd only applies to --subject external")
    try:
        spec = SubjectSpec.of(args.subject, params)
        spec.build().close()
    except TypeError as e:
        raise UsageError(f"bad parameters for {args.subject}: {e}") from None
    return spec


def _write_report(out: Path, results, suite_name: str, subject_id: str) -> SuiteReport:
    report = aggregate(results, suite_name, subject_id)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    table = render_table([report])
    (out / "report.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return report


def cmd_seeds(args) -> int:
    out = _prepare_dir(args.out, args.force)
    for name in SEED_NAMES:
        (out / f"{name}.yaml").write_text(builtin_seed_text(name), encoding="utf-8")
        progress(f"wrote {out / f'{name}.yaml'}")
    return EXIT_OK


def cmd_run(args) -> int:
    test = load_test_definition(args.test)
    spec = _subject(args)
    out = _prepare_dir(args.out, args.force)
    started = time.time()
    result, log = execute(test, spec)
    store_result(result, log, out)
    plot = out / "plots" / f"{test.name}.svg"
    plot.parent.mkdir(exist_ok=True)
    plot.write_text(render_plot(log, test), encoding="utf-8")
    _write_meta(out, started, sys.argv)
    m = result.metrics
    print(f"{test.name} {spec.subject_id} {result.outcome.value} "
          f"min_distance={m.min_obstacle_distance:.3f} min_gap={m.min_obstacle_gap:.3f} "
          f"path_length={m.path_length:.3f} deviation={m.deviation:.3f} duration={m.duration:.2f}")
    return EXIT_OK


def _search_config(args) -> SearchConfig:
    base = {}
    if args.config:
        doc = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        if not isinstance(doc, dict):
            raise SchemaError(args.config, "search config must be a mapping")
        base.update(doc)
    for flag, key in (("iterations", "iterations"), ("lam", "lambda"), ("restart_after", "restart_after"),
                      ("rng_seed", "rng_seed")):
        value = getattr(args, flag)
        if value is not None:
            base[key] = value
    if args.allow_waypoint_mutation:
        base["allow_waypoint_mutation"] = True
    try:
        return SearchConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid search config: {e}") from None


def cmd_generate(args) -> int:
    seeds = [load_test_definition(p) for p in args.seeds]
    spec = _subject(args)
    config = _search_config(args)
    predicate = None
    if args.target_outcome or args.target_max_gap is not None:
        predicate = outcome_predicate(args.target_outcome, args.target_max_gap)
    out = _prepare_dir(args.out, args.force)
    started = time.time()
    progress(f"generating from {len(seeds)} seed(s) against {spec.subject_id}: "
             f"{config.iterations} iterations x lambda {config.lam}")
    gen = generate_suite(seeds, spec, config, args.workers, args.name or out.name, predicate, out)
    write_suite(gen.suite, out)
    for state in gen.states:
        progress(f"  {state.seed.test.family}: {len(state.archive)} tests, seed fitness "
                 f"{state.seed.fitness.value:.3f}, best {state.best.fitness.value:.3f} "
                 f"({state.best.fitness.outcome_at_eval.value}), restarts {state.restarts}")
    _write_report(out, gen.results, gen.suite.name, spec.subject_id)
    _write_meta(out, started, sys.argv, workers=args.workers)
    return EXIT_OK


def cmd_rerun(args) -> int:
    suite = load_suite(args.suite)
    spec = _subject(args)
    out = _prepare_dir(args.out, args.force)
    started = time.time()
    progress(f"re-executing {len(suite)} tests of {suite.name} against {spec.subject_id}")
    results = run_suite(suite, spec, args.workers, out)
    broken = [m.name for m in suite.members if m.test is None]
    for name in broken:
        progress(f"  {name}: unreadable, recorded as Error")
    _write_report(out, results, suite.name, spec.subject_id)
    _write_meta(out, started, sys.argv, workers=args.workers)
    return EXIT_OK


def _read_report(path: str) -> SuiteReport:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    try:
        return SuiteReport.from_json(p.read_text(encoding="utf-8"))
    except (OSError, ValueError, TypeError, KeyError) as e:
        raise SchemaError(str(p), f"cannot read report: {e}") from None


def cmd_report(args) -> int:
    sys.stdout.write(render_table([_read_report(p) for p in args.reports]))
    return EXIT_OK


def cmd_compare(args) -> int:
    a, b = _read_report(args.report_a), _read_report(args.report_b)
    comparison = compare_reports(a, b)
    sys.stdout.write(comparison.to_text())
    if args.out:
        out = _prepare_file(args.out, args.force)
        out.write_text(render_comparison(comparison), encoding="utf-8")
        progress(f"wrote {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    log = read_log(args.log)
    test = load_test_definition(args.test)
    out = _prepare_file(args.out, args.force)
    out.write_text(render_plot(log, test), encoding="utf-8")
    progress(f"wrote {out}")
    return EXIT_OK


def _add_subject(p):
    p.add_argument("--subject", required=True, choices=sorted(SUBJECT_KINDS))
    p.add_argument("--cmd", help="command line of an external subject process")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="subject parameter override")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="navtestgen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("seeds", help="copy the bundled seed scenarios into a directory")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_seeds)

    p = sub.add_parser("run", help="execute one test definition")
    p.add_argument("test")
    _add_subject(p)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="search for challenging variants of seed tests")
    p.add_argument("seeds", nargs="+")
    _add_subject(p)
    p.add_argument("--config", help="search config YAML; flags override it")
    p.add_argument("--iterations", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--restart-after", type=int)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--allow-waypoint-mutation", action="store_true")
    p.add_argument("--target-outcome", choices=["Success", "SafetyStop", "Timeout", "Collision", "Error"])
    p.add_argument("--target-max-gap", type=float)
    p.add_argument("--name", help="suite name (default: output directory name)")
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rerun", help="re-execute an existing suite against a subject")
    p.add_argument("suite")
    _add_subject(p)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("report", help="print report.json files as one comparison table")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="per-scenario deltas and a two-sided bar chart")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", help="SVG chart path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="render a log as a top-down SVG")
    p.add_argument("log")
    p.add_argument("test")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except (UsageError, SchemaError, ValidationError, UnknownSubject, SuiteMismatch, EmptySuite,
            LogFormatError, FileNotFoundError, IsADirectoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001
        print(f"execution failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
