"""Command line entry point: ``lpmlat {simulate,solve,bench,reproduce}``.

Exit codes: 0 success, 1 usage error, 2 data error. ``LPM_SEED`` in the
environment overrides the scenario seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .errors import LpmError
from .filters import FilterSpec
from .harness.bench import bench, format_table
from .harness.figures import FIGURES, reproduce
from .harness.io import load_run_config, read_measurements, write_fixes, write_measurements
from .harness.pipeline import METHODS, SolveOptions, run_method
from .simulate import build_stations, synthesize

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def seed_override():
    raw = os.environ.get("LPM_SEED")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"LPM_SEED must be an integer, got {raw!r}") from None


def scenario(path, args=None):
    """Scenario from ``path`` with the LPM_SEED override; with ``args`` also
    the filter settings (file values, then command line flags)."""
    spec, fspec = load_run_config(path)
    seed = seed_override()
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    if args is None:
        return spec
    fspec = fspec or FilterSpec()
    changes = {
        name: getattr(args, attr)
        for name, attr in (("window", "filter_N"), ("passes", "passes"), ("variance_window", "variance_window"))
        if getattr(args, attr) is not None
    }
    return spec, dataclasses.replace(fspec, **changes)


def cmd_simulate(args):
    spec = scenario(args.scenario)
    write_measurements(synthesize(spec), args.out)
    return EXIT_OK


def cmd_solve(args):
    spec, fspec = scenario(args.scenario, args)
    traj = read_measurements(args.measurements, spec)
    stations = build_stations(spec)
    opts = SolveOptions(args.method, args.pivot, fspec, args.oracle_filter)
    report = run_method(traj, stations, opts)
    write_fixes(report.fixes, args.fixes, spec.dimension)
    print(json.dumps(report.summary(), indent=2))
    return EXIT_OK


def cmd_bench(args):
    spec, fspec = scenario(args.scenario, args)
    traj = synthesize(spec)
    result = bench(traj, build_stations(spec), args.repetitions, SolveOptions(pivot=args.pivot, filter=fspec))
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(format_table(result))
    return EXIT_OK


def cmd_reproduce(args):
    summary = reproduce(args.figure, args.outdir, seed_override())
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _add_filter_args(p):
    d = FilterSpec()
    p.add_argument("--pivot", type=int, default=0, help="pivot station index (default 0)")
    p.add_argument("--filter-N", dest="filter_N", type=int, help=f"box length, odd (default {d.window})")
    p.add_argument("--passes", type=int, help=f"cascaded box passes (default {d.passes})")
    p.add_argument(
        "--variance-window", type=int, help=f"moving variance length, odd (default {d.variance_window})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpmlat", description="LPM multilateration toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a measurement CSV for a scenario")
    p.add_argument("scenario")
    p.add_argument("out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="solve every frame of a measurement CSV")
    p.add_argument("measurements")
    p.add_argument("scenario")
    p.add_argument("fixes")
    p.add_argument("--method", choices=METHODS, default="linear")
    p.add_argument("--oracle-filter", action="store_true", help="replace the filter by noise-free differences")
    _add_filter_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="time linear-filtered against nonlinear TDOA")
    p.add_argument("scenario")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--json", action="store_true")
    _add_filter_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("reproduce", help="emit CSV series for one figure")
    p.add_argument("--figure", type=int, choices=FIGURES, required=True)
    p.add_argument("outdir")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lpmlat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LpmError, OSError, ValueError) as exc:
        print(f"lpmlat: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
