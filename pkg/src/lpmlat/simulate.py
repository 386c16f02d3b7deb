"""Synthetic LPM trajectories: circular station arrays, circular transponder
paths, per-frame clock offsets, measurement noise and reflection outliers.

Random draws come from a single ``numpy.random.default_rng(seed)`` (PCG64)
stream in a fixed order:

1. offsets, one per frame (only for ``per_frame_uniform``),
2. noise, a (frames, stations) block in row-major order.

Identical specs therefore give bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidSpec
from .geometry import StationArray, Trajectory

NOISE_KINDS = ("uniform", "gaussian")
OFFSET_KINDS = ("fixed", "per_frame_uniform")


@dataclass(frozen=True)
class NoiseModel:
    """``uniform``: U(-scale, +scale); ``gaussian``: N(0, scale**2). Meters."""

    kind: str = "uniform"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidSpec(f"unknown noise model {self.kind!r}")
        if not (self.scale >= 0 and math.isfinite(self.scale)):
            raise InvalidSpec("noise scale must be finite and >= 0")

    @property
    def variance(self) -> float:
        if self.kind == "uniform":
            return self.scale**2 / 3.0
        return self.scale**2

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.scale == 0:
            return np.zeros(shape)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=shape)
        return rng.normal(0.0, self.scale, size=shape)


@dataclass(frozen=True)
class OffsetModel:
    """``fixed``: every frame uses ``lo``; ``per_frame_uniform``: U(lo, hi) per frame."""

    kind: str = "per_frame_uniform"
    lo: float = 1e6
    hi: float = 1e7

    def __post_init__(self):
        if self.kind not in OFFSET_KINDS:
            raise InvalidSpec(f"unknown offset model {self.kind!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidSpec("offset bounds must be finite")
        if self.kind == "per_frame_uniform" and self.hi < self.lo:
            raise InvalidSpec("offset range is empty")

    @classmethod
    def fixed(cls, value: float) -> "OffsetModel":
        return cls("fixed", value, value)

    def draw(self, rng: np.random.Generator, frames: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(frames, float(self.lo))
        return rng.uniform(self.lo, self.hi, size=frames)


@dataclass(frozen=True)
class OutlierWindow:
    """Additive bias ``magnitude`` on one station for frames start..end inclusive."""

    start: int
    end: int
    station: int
    magnitude: float


@dataclass(frozen=True)
class ScenarioSpec:
    dimension: int = 2
    station_count: int = 4
    station_radius: float = 10.0
    path_radius: float = 5.0
    frame_count: int = 10_000
    noise_model: NoiseModel = field(default_factory=NoiseModel)
    offset_model: OffsetModel = field(default_factory=OffsetModel)
    outlier_windows: Tuple[OutlierWindow, ...] = ()
    seed: int = 0
    # explicit base-station coordinates; replaces the circular layout when set
    station_layout: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "outlier_windows",
            tuple(w if isinstance(w, OutlierWindow) else OutlierWindow(*w) for w in self.outlier_windows),
        )
        if self.station_layout is not None:
            object.__setattr__(
                self, "station_layout", tuple(tuple(float(c) for c in p) for p in self.station_layout)
            )
        self.validate()

    def validate(self) -> None:
        if self.dimension not in (2, 3):
            raise InvalidSpec("dimension must be 2 or 3")
        if self.frame_count < 1:
            raise InvalidSpec("frame_count must be positive")
        if self.station_layout is not None:
            if any(len(p) != self.dimension for p in self.station_layout):
                raise InvalidSpec("station_layout points must match the dimension")
            n = len(self.station_layout)
        else:
            n = self.station_count
            if not self.path_radius < self.station_radius:
                raise InvalidSpec("path_radius must be smaller than station_radius")
        if n < 3:
            raise InvalidSpec("at least 3 base stations are required")
        if self.path_radius < 0:
            raise InvalidSpec("path_radius must be >= 0")
        for w in self.outlier_windows:
            if not (0 <= w.start <= w.end < self.frame_count):
                raise InvalidSpec(f"outlier window {w} outside 0..{self.frame_count - 1}")
            if not 0 <= w.station < n:
                raise InvalidSpec(f"outlier station {w.station} out of range")

    @property
    def stations_in_use(self) -> int:
        return len(self.station_layout) if self.station_layout is not None else self.station_count


def build_stations(spec: ScenarioSpec) -> StationArray:
    """Base stations equally spaced on a circle about the origin (or
    ``spec.station_layout``), reference station at the origin."""
    d = spec.dimension
    if spec.station_layout is not None:
        return StationArray(np.array(spec.station_layout), np.zeros(d))
    n = spec.station_count
    if n < 3:
        raise InvalidSpec("at least 3 base stations are required")
    angles = 2.0 * np.pi * np.arange(n) / n
    bases = np.zeros((n, d))
    bases[:, 0] = spec.station_radius * np.cos(angles)
    bases[:, 1] = spec.station_radius * np.sin(angles)
    # exact zeros at the quarter turns keep the symmetric layouts symmetric
    bases[np.abs(bases) < 1e-12 * spec.station_radius] = 0.0
    return StationArray(bases, np.zeros(d))


def circular_path(spec: ScenarioSpec, center=None) -> np.ndarray:
    """Transponder positions, frame k at angle 2*pi*k/frame_count, shape (frames, d)."""
    d = spec.dimension
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    k = np.arange(spec.frame_count)
    angles = 2.0 * np.pi * k / spec.frame_count
    path = np.tile(c, (spec.frame_count, 1))
    path[:, 0] += spec.path_radius * np.cos(angles)
    path[:, 1] += spec.path_radius * np.sin(angles)
    return path


def exact_ranges(stations: StationArray, path: np.ndarray) -> np.ndarray:
    """|M_k - B_i| - |T - B_i| for every frame k and station i."""
    ranges = np.linalg.norm(path[:, None, :] - stations.bases[None, :, :], axis=-1)
    return ranges - stations.reference_ranges


def ground_truth(spec: ScenarioSpec):
    """(path, offsets) exactly as ``synthesize`` produces them."""
    stations = build_stations(spec)
    path = circular_path(spec, stations.reference)
    offsets = spec.offset_model.draw(np.random.default_rng(spec.seed), spec.frame_count)
    return path, offsets


def synthesize(spec: ScenarioSpec) -> Trajectory:
    stations = build_stations(spec)
    path = circular_path(spec, stations.reference)
    rng = np.random.default_rng(spec.seed)
    offsets = spec.offset_model.draw(rng, spec.frame_count)
    noise = spec.noise_model.draw(rng, (spec.frame_count, stations.count))
    for w in spec.outlier_windows:
        noise[w.start : w.end + 1, w.station] += w.magnitude
    # noise and outliers join the O(10 m) geometric term before the offset is added
    pseudo = offsets[:, None] + (exact_ranges(stations, path) + noise)
    return Trajectory(pseudo, truth=path, offsets=offsets)


def figure4_spec(**overrides) -> ScenarioSpec:
    """Four stations on a 10 m circle, transponder on a 5 m circle, 0.1 m max noise."""
    base = dict(
        dimension=2,
        station_count=4,
        station_radius=10.0,
        path_radius=5.0,
        frame_count=10_000,
        noise_model=NoiseModel("uniform", 0.1),
        offset_model=OffsetModel("per_frame_uniform", 1e6, 1e7),
        seed=0,
    )
    base.update(overrides)
    return ScenarioSpec(**base)
