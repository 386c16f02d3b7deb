"""Scenario presets and plot-ready CSV series for the reproduced figures.

=========  ====================================================================
figure     content
=========  ====================================================================
4          truth circle and unfiltered linear estimates, 4 stations, 0.1 m noise
7          linear solve with the oracle (noise-free) filter
8          linear solve with the real moving-average filter
9          one difference channel through the filter over a 10 m outlier
10         filtered-linear estimates with the outlier active
11         variance-weighted solve on the 4-station square with the outlier;
           the path crosses singular configurations, degeneracy flags included
12         filtered-linear versus warm-started nonlinear TDOA
=========  ====================================================================
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..errors import InvalidInput
from ..filters import FilterSpec
from ..simulate import OutlierWindow, ScenarioSpec, build_stations, figure4_spec, synthesize
from ..transform import pivot_differences
from .io import save_scenario, write_series
from .metrics import path_errors
from .pipeline import FilterBank, RunReport, SolveOptions, run_method

FIGURES = (4, 7, 8, 9, 10, 11, 12)
OUTLIER = OutlierWindow(3500, 3600, 1, 10.0)
# six stations leave redundant rows, which is what lets weighting reject a channel
OUTLIER_STATIONS = 6


def figure_spec(figure: int, seed: Optional[int] = None) -> ScenarioSpec:
    if figure not in FIGURES:
        raise InvalidInput(f"unknown figure {figure}; choose from {', '.join(map(str, FIGURES))}")
    kw = {} if seed is None else {"seed": seed}
    if figure in (9, 10):
        return figure4_spec(station_count=OUTLIER_STATIONS, outlier_windows=(OUTLIER,), **kw)
    if figure == 11:
        return figure4_spec(outlier_windows=(OUTLIER,), **kw)
    return figure4_spec(**kw)


def figure_methods(figure: int) -> List[SolveOptions]:
    return {
        4: [SolveOptions("linear")],
        7: [SolveOptions("linear-filtered", oracle_filter=True)],
        8: [SolveOptions("linear-filtered")],
        9: [],
        10: [SolveOptions("linear-filtered"), SolveOptions("linear-weighted")],
        11: [SolveOptions("linear-weighted")],
        12: [SolveOptions("linear-filtered"), SolveOptions("nonlinear-tdoa")],
    }[figure]


def _estimate_columns(report: RunReport, truth: np.ndarray):
    n = len(report.fixes)
    d = truth.shape[1]
    pos = np.full((n, d), np.nan)
    for k, f in enumerate(report.fixes):
        if f.position is not None and not f.warmup:
            pos[k] = f.position
    err = path_errors(report.fixes, truth, report.delay)
    cond = np.array([f.condition_number for f in report.fixes])
    deg = [int(f.degenerate and not f.warmup) for f in report.fixes]
    warm = [int(f.warmup) for f in report.fixes]
    header = ["frame", "epoch"] + ["x_m", "y_m", "z_m"][:d] + ["error_m", "condition", "degenerate", "warmup"]
    frames = list(range(n))
    epochs = [k - report.delay for k in frames]
    cols = [frames, epochs] + [pos[:, j] for j in range(d)] + [err, cond, deg, warm]
    return header, cols


def reproduce(figure: int, outdir, seed: Optional[int] = None) -> Dict[str, object]:
    """Write the figure's CSV series and scenario JSON into ``outdir``."""
    spec = figure_spec(figure, seed)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(spec, out / "scenario.json", FilterSpec())
    traj = synthesize(spec)
    stations = build_stations(spec)
    d = spec.dimension
    axes = ["x_m", "y_m", "z_m"][:d]
    write_series(out / "truth.csv", ["frame"] + axes, [range(len(traj))] + [traj.truth[:, j] for j in range(d)])
    summary: Dict[str, object] = {"figure": figure, "files": ["scenario.json", "truth.csv"]}

    if figure == 9:
        fs = FilterSpec()
        diffs = pivot_differences(traj, stations, 0)
        bank = FilterBank.run(diffs, fs, 0)
        ch = bank.channels[OUTLIER.station]
        write_series(
            out / "filter_channel.csv",
            ["frame", "raw_m", "filtered_m", "variance_m2", "weight", "outlier", "warmup"],
            [range(len(traj)), diffs[:, OUTLIER.station], ch.value, ch.variance, ch.weight,
             ch.outlier.astype(int), ch.warmup.astype(int)],
        )
        summary["files"].append("filter_channel.csv")
        summary["threshold_m2"] = ch.threshold
        summary["outlier_frames"] = int(ch.outlier.sum())
        return summary

    reports = {}
    for opts in figure_methods(figure):
        report = run_method(traj, stations, opts)
        header, cols = _estimate_columns(report, traj.truth)
        name = f"estimates_{opts.method}.csv"
        write_series(out / name, header, cols)
        summary["files"].append(name)
        reports[opts.method] = report.summary()
    summary["reports"] = reports
    return summary
