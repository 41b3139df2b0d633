"""Command line entry point.

    gmbfusion run SCENARIO.json [--methods ...] [--runs N] [--seed S] [--output DIR] [--jobs J]
                                [--set name=value ...]
    gmbfusion emit-plotdata SUMMARY.csv [--output DIR]
    gmbfusion validate-scenario SCENARIO.json
    gmbfusion export-scenario {scenario1,scenario2} OUT.json [--truth CSV] [--scans CSV --seed S]

Exit status: 0 on success, 1 for usage errors (bad arguments or
overrides), 2 when the command fails while running (unreadable or invalid
files, numerical failures).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import GmbFusionError, InvalidParameterError
from .experiment import ExperimentSpec, Tuning, all_methods, check_methods, emit_plotdata, run_experiment
from .metrics import OspaParams
from .scenario import (generate_scans, generate_truth, load_config, save_config, scenario1, scenario2,
                       write_scans_csv, write_truth_csv)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

SCENARIOS = {"scenario1": scenario1, "scenario2": scenario2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _number(text):
    if text.lower() == "none":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_overrides(items):
    """``name=value`` strings to a ``Tuning``; ``ospa_cutoff``/``ospa_order`` set the OSPA parameters."""
    names = {f.name for f in dataclasses.fields(Tuning)} - {"ospa"}
    values, ospa = {}, {}
    for item in items or ():
        name, sep, text = item.partition("=")
        if not sep:
            raise UsageError(f"override {item!r} is not of the form name=value")
        try:
            value = _number(text)
        except ValueError:
            raise UsageError(f"override {name}: {text!r} is not a number") from None
        if name in ("ospa_cutoff", "ospa_order"):
            ospa[name[5:]] = value
        elif name in names:
            values[name] = value
        else:
            raise UsageError(f"unknown override {name!r}; choose from "
                             f"{', '.join(sorted(names | {'ospa_cutoff', 'ospa_order'}))}")
    try:
        if ospa:
            values["ospa"] = OspaParams(**ospa)
        return Tuning(**values)
    except (InvalidParameterError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    parser = _Parser(prog="gmbfusion", description="Distributed GLMB tracking with GCI fusion of GMB densities.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    run = sub.add_parser("run", help="Monte Carlo experiment on a scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--methods", nargs="+", default=(),
                     help="subset of local-node-<i>, fogmb-fusion, sogmb-fusion (default: all)")
    run.add_argument("--runs", type=int, default=1, help="number of Monte Carlo runs")
    run.add_argument("--seed", type=int, default=0, help="seed of the first run")
    run.add_argument("--output", default="results", help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--set", dest="overrides", action="append", metavar="NAME=VALUE",
                     help="tuning override, e.g. k_best=50 or omega=0.7 (repeatable)")

    plot = sub.add_parser("emit-plotdata", help="per-figure series from a summary CSV")
    plot.add_argument("summary", help="summary.csv written by 'run'")
    plot.add_argument("--output", default="plotdata", help="output directory")

    check = sub.add_parser("validate-scenario", help="check a scenario file")
    check.add_argument("scenario")

    export = sub.add_parser("export-scenario", help="write a built-in scenario as JSON")
    export.add_argument("name", choices=sorted(SCENARIOS))
    export.add_argument("output", help="scenario JSON to write")
    export.add_argument("--duration", type=int, default=100)
    export.add_argument("--truth", help="also write the ground truth as CSV")
    export.add_argument("--scans", help="also write the scans of every sensor as CSV")
    export.add_argument("--seed", type=int, default=0, help="Monte Carlo seed of the exported scans")
    return parser


def _run(args):
    tuning = parse_overrides(args.overrides)
    if args.runs < 1 or args.jobs < 1:
        raise UsageError("--runs and --jobs must be at least 1")
    config = load_config(args.scenario)
    try:
        methods = check_methods(args.methods, len(config.sensors))
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from None
    spec = ExperimentSpec(args.scenario, methods, args.runs, args.seed, args.output, tuning, args.jobs)
    summary, path = run_experiment(spec, config)
    for m in summary.methods:
        print(f"{m:>16}  time-averaged OSPA {summary.time_averaged_ospa(m):8.3f}")
    if summary.failures:
        print(f"{len(summary.failures)} of {spec.n_runs} runs diverged and were excluded", file=sys.stderr)
    for m, n in summary.fallbacks.items():
        if n:
            print(f"{m}: fusion degenerated at {n} steps; the reference node's estimate was used",
                  file=sys.stderr)
    print(path)


def _emit(args):
    for path in emit_plotdata(args.summary, args.output):
        print(path)


def _validate(args):
    config = load_config(args.scenario)
    print(f"{args.scenario}: ok ({config.name}, {len(config.tracks)} tracks, {len(config.sensors)} sensors, "
          f"{config.duration} steps; methods {', '.join(all_methods(len(config.sensors)))})")


def _export(args):
    if args.duration < 1:
        raise UsageError("--duration must be at least 1")
    config = SCENARIOS[args.name](duration=args.duration)
    save_config(config, args.output)
    truth = generate_truth(config)
    if args.truth:
        write_truth_csv(truth, args.truth)
    if args.scans:
        write_scans_csv([generate_scans(config, truth, i, args.seed) for i in range(len(config.sensors))],
                        args.scans)
    print(args.output)


COMMANDS = {"run": _run, "emit-plotdata": _emit, "validate-scenario": _validate, "export-scenario": _export}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GmbFusionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
