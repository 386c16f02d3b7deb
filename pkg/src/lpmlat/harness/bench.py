"""Linear-filtered versus nonlinear TDOA timing on identical filtered data."""

from __future__ import annotations

import statistics
from typing import Dict

from ..geometry import StationArray, Trajectory
from ..transform import pivot_differences
from .pipeline import FilterBank, SolveOptions, run_method

BENCH_METHODS = ("linear-filtered", "nonlinear-tdoa")


def bench(traj: Trajectory, stations: StationArray, repetitions: int = 5, base: SolveOptions = SolveOptions()) -> Dict:
    """Solve-loop wall clock per method (median of ``repetitions``) and mean errors.

    Filtering runs once and both methods consume the same FilterBank, so only
    the lateration step is timed.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    bank = FilterBank.run(pivot_differences(traj, stations, base.pivot), base.filter, base.pivot)
    rows = {}
    for method in BENCH_METHODS:
        opts = SolveOptions(method, base.pivot, base.filter, False, base.lm, base.linear)
        times = []
        report = None
        for _ in range(repetitions):
            report = run_method(traj, stations, opts, bank)
            times.append(report.wall_clock_ms)
        rows[method] = {
            "median_ms": statistics.median(times),
            "min_ms": min(times),
            "max_ms": max(times),
            "stdev_ms": statistics.stdev(times) if len(times) > 1 else 0.0,
            "times_ms": times,
            "mean_path_error_m": report.mean_path_error,
            "frames_solved": report.frames_solved,
            "not_converged": report.not_converged,
        }
    ratio = rows["linear-filtered"]["median_ms"] / rows["nonlinear-tdoa"]["median_ms"]
    return {"repetitions": repetitions, "frames": len(traj), "methods": rows, "time_ratio": ratio}


def format_table(result: Dict) -> str:
    lines = [f"{'method':<16} {'median ms':>10} {'stdev ms':>9} {'mean err m':>12} {'solved':>7}"]
    for method, r in result["methods"].items():
        err = r["mean_path_error_m"]
        err_s = "n/a" if err is None else f"{err:.6g}"
        lines.append(
            f"{method:<16} {r['median_ms']:>10.1f} {r['stdev_ms']:>9.1f} {err_s:>12} {r['frames_solved']:>7}"
        )
    lines.append(f"time ratio linear/nonlinear: {result['time_ratio']:.3f} ({result['repetitions']} repetitions)")
    return "\n".join(lines)
