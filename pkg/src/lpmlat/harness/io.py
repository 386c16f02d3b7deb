"""Flat-file formats: measurement CSV, fixes CSV and scenario JSON.

Floats are written with 17 significant digits, which round-trips every
double exactly. Files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..errors import InvalidInput, InvalidSpec
from ..filters import FilterSpec
from ..geometry import Trajectory
from ..simulate import NoiseModel, OffsetModel, OutlierWindow, ScenarioSpec, ground_truth
from ..solvers import Fix

MEASUREMENT_HEADER = ("frame", "station", "pseudo_range_m")
FIX_HEADER = (
    "frame", "x_m", "y_m", "offset_m", "residual_norm", "condition", "converged", "degenerate", "warmup",
)


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_measurements(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEASUREMENT_HEADER)
        for k, row in zip(traj.frame_indices, traj.pseudo_ranges):
            for i, value in enumerate(row):
                w.writerow((int(k), i, fmt(value)))


def read_measurements(path, spec: Optional[ScenarioSpec] = None) -> Trajectory:
    """Parse a measurement CSV.

    Every frame must list every station exactly once. With ``spec`` the
    scenario's ground truth (path and offsets) is attached when the frames
    are 0..frame_count-1.
    """
    rows = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MEASUREMENT_HEADER:
            raise InvalidInput(f"{path}: expected header {','.join(MEASUREMENT_HEADER)}")
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise InvalidInput(f"{path}:{line_no}: expected 3 fields, got {len(rec)}")
            try:
                frame, station, value = int(rec[0]), int(rec[1]), float(rec[2])
            except ValueError as exc:
                raise InvalidInput(f"{path}:{line_no}: {exc}") from None
            if frame < 0 or station < 0 or not math.isfinite(value):
                raise InvalidInput(f"{path}:{line_no}: invalid record")
            per_frame = rows.setdefault(frame, {})
            if station in per_frame:
                raise InvalidInput(f"{path}:{line_no}: duplicate station {station} in frame {frame}")
            per_frame[station] = value
    if not rows:
        raise InvalidInput(f"{path}: no measurements")
    frames = sorted(rows)
    n = max(max(r) for r in rows.values()) + 1
    pseudo = np.empty((len(frames), n))
    for row, k in enumerate(frames):
        r = rows[k]
        if len(r) != n:
            raise InvalidInput(f"{path}: frame {k} has {len(r)} of {n} stations")
        pseudo[row] = [r[i] for i in range(n)]
    traj = Trajectory(pseudo, frame_indices=np.array(frames))
    if spec is not None:
        if spec.stations_in_use != n:
            raise InvalidInput(f"measurements have {n} stations, scenario has {spec.stations_in_use}")
        if frames == list(range(spec.frame_count)):
            traj.truth, traj.offsets = ground_truth(spec)
    return traj


def write_fixes(fixes: Iterable[Fix], path, dimension: int = 2) -> None:
    axes = ("x_m", "y_m", "z_m")[:dimension]
    header = ("frame",) + axes + FIX_HEADER[3:]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for f in fixes:
            pos = [""] * dimension if f.position is None else [fmt(v) for v in f.position]
            w.writerow(
                [f.frame_index, *pos, fmt(f.offset), fmt(f.residual_norm), fmt(f.condition_number),
                 int(f.converged), int(f.degenerate), int(f.warmup)]
            )


def write_series(path, header, columns) -> None:
    """Columns of equal length as a CSV with the given header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, (int, np.integer, str)) else fmt(v) for v in row])


# -- scenario JSON --------------------------------------------------------

_FIELDS = {f.name for f in dataclasses.fields(ScenarioSpec)}
# optional solver-side settings carried alongside the scenario
FILTER_KEY = "filter"


def _model(cls, obj, key):
    if not isinstance(obj, dict):
        raise InvalidSpec(f"{key} must be an object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidSpec(f"unknown keys in {key}: {', '.join(sorted(unknown))}")
    return cls(**obj)


def spec_from_dict(data: dict) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise InvalidSpec("scenario must be a JSON object")
    unknown = set(data) - _FIELDS - {FILTER_KEY}
    if unknown:
        raise InvalidSpec(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    kw = dict(data)
    kw.pop(FILTER_KEY, None)
    try:
        if "noise_model" in kw:
            kw["noise_model"] = _model(NoiseModel, kw["noise_model"], "noise_model")
        if "offset_model" in kw:
            kw["offset_model"] = _model(OffsetModel, kw["offset_model"], "offset_model")
        if "outlier_windows" in kw:
            kw["outlier_windows"] = tuple(
                _model(OutlierWindow, w, "outlier_windows") if isinstance(w, dict) else OutlierWindow(*w)
                for w in kw["outlier_windows"]
            )
        for name in ("dimension", "station_count", "frame_count", "seed"):
            if name in kw and (isinstance(kw[name], bool) or not isinstance(kw[name], int)):
                raise InvalidSpec(f"{name} must be an integer")
        return ScenarioSpec(**kw)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def filter_from_dict(data: dict) -> Optional[FilterSpec]:
    """The optional ``filter`` object of a scenario file, or None."""
    if not isinstance(data, dict) or FILTER_KEY not in data:
        return None
    try:
        return _model(FilterSpec, data[FILTER_KEY], FILTER_KEY)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def spec_to_dict(spec: ScenarioSpec, filter_spec: Optional[FilterSpec] = None) -> dict:
    d = dataclasses.asdict(spec)
    d["outlier_windows"] = [dataclasses.asdict(w) for w in spec.outlier_windows]
    if spec.station_layout is None:
        del d["station_layout"]
    else:
        d["station_layout"] = [list(p) for p in spec.station_layout]
    if filter_spec is not None:
        d[FILTER_KEY] = dataclasses.asdict(filter_spec)
    return d


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: malformed JSON ({exc})") from None


def load_scenario(path) -> ScenarioSpec:
    return spec_from_dict(_read_json(path))


def load_run_config(path):
    """(ScenarioSpec, FilterSpec or None) from one scenario file."""
    data = _read_json(path)
    return spec_from_dict(data), filter_from_dict(data)


def save_scenario(spec: ScenarioSpec, path, filter_spec: Optional[FilterSpec] = None) -> None:
    text = json.dumps(spec_to_dict(spec, filter_spec), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")
