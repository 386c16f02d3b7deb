"""Run one solving method over a whole trajectory.

Filtered methods feed every pivot-difference channel through its own
``FilterState``. The smoothed value leaving the filter at frame k describes
epoch k - delay, so the fix emitted at frame k is an estimate of the
transponder at that earlier epoch; ``RunReport.delay`` records the shift
and ``mean_path_error`` compares against correspondingly delayed truth.

Variance-weighted solving additionally waits (W - 1) / 2 frames so that
the moving-variance window is centred on the value it weights.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..errors import InvalidInput
from ..filters import ChannelOutput, FilterSpec, filter_channel
from ..geometry import StationArray, Trajectory
from ..solvers import (
    Fix,
    LinearConfig,
    LmConfig,
    PivotSolver,
    solve_nonlinear_toa,
    solve_tdoa_diffs,
)
from ..transform import AugmentedFrame, pivot_differences, pivot_pairs
from .metrics import path_errors

METHODS = ("linear", "linear-weighted", "linear-filtered", "nonlinear-tdoa", "nonlinear-toa")
FILTERED_METHODS = ("linear-weighted", "linear-filtered", "nonlinear-tdoa")


@dataclass(frozen=True)
class SolveOptions:
    method: str = "linear"
    pivot: int = 0
    filter: FilterSpec = field(default_factory=FilterSpec)
    oracle_filter: bool = False
    lm: LmConfig = field(default_factory=LmConfig)
    linear: LinearConfig = field(default_factory=LinearConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInput(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")

    @property
    def filtered(self) -> bool:
        return self.method in FILTERED_METHODS

    @property
    def delay(self) -> int:
        if not self.filtered or self.oracle_filter:
            return 0
        if self.method == "linear-weighted":
            return self.filter.variance_delay
        return self.filter.delay


@dataclass
class RunReport:
    method: str
    fixes: List[Fix]
    delay: int
    wall_clock_ms: float
    mean_path_error: Optional[float]
    frames: int
    frames_solved: int
    warmup: int
    degenerate: int
    not_converged: int
    flags: Dict[str, int]
    outlier_frames: int = 0

    def summary(self) -> dict:
        return {
            "method": self.method,
            "frames": self.frames,
            "frames_solved": self.frames_solved,
            "warmup": self.warmup,
            "degenerate": self.degenerate,
            "not_converged": self.not_converged,
            "delay_frames": self.delay,
            "mean_path_error_m": self.mean_path_error,
            "wall_clock_ms": self.wall_clock_ms,
            "outlier_frames": self.outlier_frames,
            "flags": self.flags,
        }


@dataclass
class FilterBank:
    """Filter outputs for every non-pivot channel of a trajectory."""

    pivot: int
    channels: Dict[int, ChannelOutput]
    spec: FilterSpec

    @classmethod
    def run(cls, diffs: np.ndarray, spec: FilterSpec, pivot: int) -> "FilterBank":
        channels = {i: filter_channel(diffs[:, i], spec) for i in range(diffs.shape[1]) if i != pivot}
        return cls(pivot, channels, spec)

    def outlier_mask(self) -> np.ndarray:
        return np.any([c.outlier for c in self.channels.values()], axis=0)


def oracle_differences(truth: np.ndarray, stations: StationArray, pivot: int) -> np.ndarray:
    """Noise-free L_i - L_pivot from the true path (a perfect, delay-free filter)."""
    rho = np.linalg.norm(truth[:, None, :] - stations.bases[None, :, :], axis=-1)
    return rho - rho[:, pivot : pivot + 1]


def _solve_frames(traj, stations, opts: SolveOptions, bank: Optional[FilterBank], oracle):
    n_frames = len(traj)
    pivot = opts.pivot
    pairs = pivot_pairs(stations.count, pivot)
    others = [p[0] for p in pairs]
    fixes: List[Fix] = []
    start = np.zeros(stations.dimension)
    ref = stations.reference_ranges
    pseudo = traj.pseudo_ranges
    linear = PivotSolver(stations, pivot, opts.linear)
    if opts.method == "linear":
        for k in range(n_frames):
            fixes.append(linear.solve(pseudo[k], None, None, k))
        return fixes
    if opts.method == "nonlinear-toa":
        for k in range(n_frames):
            aug = AugmentedFrame(k, pseudo[k], ref)
            fix = solve_nonlinear_toa(aug, stations, start, None, opts.lm)
            if fix.converged and np.all(np.isfinite(fix.position)):
                start = fix.position
            fixes.append(fix)
        return fixes

    delay = opts.delay
    weighted = opts.method == "linear-weighted"
    if oracle is not None:
        values, weights, warm = oracle[:, others], None, np.zeros(n_frames, dtype=bool)
    else:
        values = np.column_stack([bank.channels[i].value for i in others])
        weights = np.column_stack([bank.channels[i].weight for i in others])
        warm = np.any([bank.channels[i].warmup for i in others], axis=0)
    lag = delay - (0 if bank is None else bank.spec.delay)  # extra wait for centred variance
    for k in range(n_frames):
        if oracle is not None:
            epoch, filtered, w = k, values[k], None
        else:
            if warm[k] or k - lag < 0:
                fixes.append(Fix.warming_up(k))
                continue
            epoch = k - delay
            filtered = values[k - lag]
            w = weights[k]
        if opts.method == "nonlinear-tdoa":
            fix = solve_tdoa_diffs(filtered, stations, pairs, start, opts.lm, k)
            if fix.converged and np.all(np.isfinite(fix.position)):
                start = fix.position
        else:
            # frame index k: the fix is reported at the output frame
            fix = linear.solve(pseudo[epoch], filtered, w if weighted else None, k)
        fixes.append(fix)
    return fixes


def run_method(
    traj: Trajectory,
    stations: StationArray,
    opts: SolveOptions,
    bank: Optional[FilterBank] = None,
) -> RunReport:
    """Solve every frame; ``bank`` may be passed to reuse one filtering pass."""
    if traj.station_count != stations.count:
        raise InvalidInput(
            f"measurements have {traj.station_count} stations, scenario has {stations.count}"
        )
    if not 0 <= opts.pivot < stations.count:
        raise InvalidInput(f"pivot {opts.pivot} out of range")
    oracle = None
    if opts.filtered:
        if opts.oracle_filter:
            if traj.truth is None:
                raise InvalidInput("the oracle filter needs ground truth")
            oracle = oracle_differences(traj.truth, stations, opts.pivot)
        elif bank is None:
            bank = FilterBank.run(pivot_differences(traj, stations, opts.pivot), opts.filter, opts.pivot)
    t0 = time.perf_counter()
    fixes = _solve_frames(traj, stations, opts, bank, oracle)
    elapsed = (time.perf_counter() - t0) * 1e3
    return make_report(opts.method, fixes, traj, opts.delay, elapsed, bank)


def make_report(method, fixes, traj, delay, elapsed_ms, bank=None) -> RunReport:
    warm = sum(f.warmup for f in fixes)
    degenerate = sum((not f.warmup) and f.degenerate for f in fixes)
    solved = len(fixes) - warm - degenerate
    not_conv = sum((not f.warmup) and (not f.degenerate) and (not f.converged) for f in fixes)
    flags = Counter()
    for f in fixes:
        if f.warmup:
            flags["warmup"] += 1
        elif f.degenerate:
            flags["degenerate"] += 1
        elif not f.converged:
            flags["not_converged"] += 1
        else:
            flags["ok"] += 1
    mean = None
    if traj.truth is not None:
        errs = path_errors(fixes, traj.truth, delay)
        if np.any(np.isfinite(errs)):
            mean = float(np.nanmean(errs))
    outliers = int(bank.outlier_mask().sum()) if bank is not None else 0
    return RunReport(
        method, fixes, delay, elapsed_ms, mean, len(fixes), solved, warm, degenerate, not_conv,
        dict(flags), outliers,
    )
