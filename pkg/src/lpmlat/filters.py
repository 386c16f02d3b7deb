"""Streaming pre-lateration filters for offset-free difference channels.

Each channel runs ``passes`` cascaded moving-average (box) filters of odd
length N, followed by a moving variance over the filtered stream. All
stages are O(1) per sample: a box pass keeps a ring buffer and a running
sum, the variance stage a sliding-window Welford accumulator.

Buffers start zero-filled, so the streaming output equals
``np.convolve(x, composite_kernel(spec))[:len(x)]`` sample for sample;
the first ``warmup_samples(spec)`` outputs are flagged as warm-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import InvalidInput, InvalidSpec

ADAPTIVE_THRESHOLD_FACTOR = 25.0


@dataclass(frozen=True)
class FilterSpec:
    """Filter parameters.

    ``outlier_variance_threshold`` is in m^2; ``None`` selects the adaptive
    threshold (25x the channel's median post-warm-up variance), which can
    only be applied once the whole channel is known (see ``flag_outliers``).
    """

    window: int = 31
    passes: int = 4
    variance_window: int = 121
    outlier_variance_threshold: Optional[float] = None
    weight_floor: float = 1e-6

    def __post_init__(self):
        for name in ("window", "variance_window"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise InvalidSpec(f"{name} must be a positive odd integer, got {v}")
        if self.passes < 1:
            raise InvalidSpec("passes must be >= 1")
        t = self.outlier_variance_threshold
        if t is not None and not t > 0:
            raise InvalidSpec("outlier_variance_threshold must be > 0")
        if not self.weight_floor > 0:
            raise InvalidSpec("weight_floor must be > 0")

    @property
    def delay(self) -> int:
        """Group delay of the smoothed value, passes * (N - 1) / 2 samples."""
        return self.passes * (self.window - 1) // 2

    @property
    def variance_delay(self) -> int:
        """Delay of the centre of the variance window behind the input."""
        return self.delay + (self.variance_window - 1) // 2

    @property
    def warmup_samples(self) -> int:
        return self.passes * (self.window - 1) + self.variance_window - 1


@dataclass(frozen=True)
class FilteredSample:
    frame_index: int
    value: float
    variance: float
    weight: float
    outlier: bool
    warmup: bool


class NonFiniteSample(InvalidInput):
    """Raised by ``FilterState.push`` for NaN/inf input; the state is left untouched."""


class _Box:
    __slots__ = ("buf", "pos", "total", "n")

    def __init__(self, n: int):
        self.buf = [0.0] * n
        self.pos = 0
        self.total = 0.0
        self.n = n

    def push(self, x: float) -> float:
        self.total += x - self.buf[self.pos]
        self.buf[self.pos] = x
        self.pos = (self.pos + 1) % self.n
        return self.total / self.n


class _MovingVariance:
    __slots__ = ("buf", "pos", "mean", "m2", "n")

    def __init__(self, n: int):
        self.buf = [0.0] * n
        self.pos = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.n = n

    def push(self, x: float) -> float:
        old = self.buf[self.pos]
        self.buf[self.pos] = x
        self.pos = (self.pos + 1) % self.n
        mean = self.mean + (x - old) / self.n
        self.m2 += (x - old) * ((x - mean) + (old - self.mean))
        self.mean = mean
        if self.m2 < 0.0:
            self.m2 = 0.0
        return self.m2 / self.n


class FilterState:
    """Single-channel streaming filter. Not shareable across threads."""

    def __init__(self, spec: FilterSpec = FilterSpec()):
        self.spec = spec
        self._boxes = [_Box(spec.window) for _ in range(spec.passes)]
        self._var = _MovingVariance(spec.variance_window)
        self.samples_seen = 0

    def push(self, x: float, frame_index: Optional[int] = None) -> FilteredSample:
        x = float(x)
        if not math.isfinite(x):
            raise NonFiniteSample(f"non-finite sample {x!r}")
        y = x
        for box in self._boxes:
            y = box.push(y)
        var = self._var.push(y)
        index = self.samples_seen if frame_index is None else frame_index
        self.samples_seen += 1
        warmup = self.samples_seen <= self.spec.warmup_samples
        threshold = self.spec.outlier_variance_threshold
        outlier = (not warmup) and threshold is not None and var > threshold
        return FilteredSample(index, y, var, weight(var, self.spec.weight_floor), outlier, warmup)


def weight(variance: float, floor: float) -> float:
    return 1.0 / max(variance, floor)


def weights(samples: Sequence[FilteredSample], floor: float = FilterSpec.weight_floor) -> List[float]:
    """w = 1 / max(var, floor) for each sample."""
    return [weight(s.variance, floor) for s in samples]


def composite_kernel(spec: FilterSpec) -> np.ndarray:
    """Effective FIR kernel: the length-N box convolved with itself ``passes`` times."""
    box = np.full(spec.window, 1.0 / spec.window)
    k = box
    for _ in range(spec.passes - 1):
        k = np.convolve(k, box)
    return k


def gaussian_reference(spec: FilterSpec) -> np.ndarray:
    """Discrete Gaussian on the composite kernel's support with matching variance."""
    n = spec.passes * (spec.window - 1) + 1
    sigma2 = spec.passes * (spec.window**2 - 1) / 12.0
    m = np.arange(n) - (n - 1) / 2
    g = np.exp(-(m**2) / (2 * sigma2))
    return g / g.sum()


@dataclass
class ChannelOutput:
    """Per-sample filter output for one channel, column-wise."""

    value: np.ndarray
    variance: np.ndarray
    weight: np.ndarray
    outlier: np.ndarray
    warmup: np.ndarray
    threshold: float

    def sample(self, k: int) -> FilteredSample:
        return FilteredSample(
            k,
            float(self.value[k]),
            float(self.variance[k]),
            float(self.weight[k]),
            bool(self.outlier[k]),
            bool(self.warmup[k]),
        )


def filter_channel(x: Iterable[float], spec: FilterSpec = FilterSpec()) -> ChannelOutput:
    """Stream ``x`` through a fresh ``FilterState`` and apply outlier flags."""
    state = FilterState(spec)
    out = [state.push(v) for v in x]
    value = np.array([s.value for s in out])
    variance = np.array([s.variance for s in out])
    warmup = np.array([s.warmup for s in out], dtype=bool)
    outlier, threshold = flag_outliers(variance, warmup, spec)
    w = 1.0 / np.maximum(variance, spec.weight_floor)
    return ChannelOutput(value, variance, w, outlier, warmup, threshold)


def adaptive_threshold(variance: np.ndarray, warmup: np.ndarray) -> float:
    settled = variance[~warmup]
    if settled.size == 0:
        return math.inf
    return ADAPTIVE_THRESHOLD_FACTOR * float(np.median(settled))


def flag_outliers(variance: np.ndarray, warmup: np.ndarray, spec: FilterSpec):
    """Boolean outlier mask and the threshold used (fixed or adaptive)."""
    threshold = spec.outlier_variance_threshold
    if threshold is None:
        threshold = adaptive_threshold(variance, warmup)
    return (~warmup) & (variance > threshold), threshold
