"""TOA to TDOA: fold the reference geometry into each pseudo-range and form
pairwise differences, which no longer contain the per-frame clock offset.

Differences are always taken as ``(R_i - R_j) + (|T-B_i| - |T-B_j|)``: the
raw pseudo-ranges (offset ~1e7 m) cancel against each other before any
small geometric term is added, which keeps the result exact to ~1e-9 m.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple

import numpy as np

from .errors import InvalidInput
from .geometry import Frame, StationArray, Trajectory


@dataclass(frozen=True, eq=False)
class AugmentedFrame:
    """L_i = R_i + |T - B_i|, so that L_i - O = |M - B_i|.

    The raw pseudo-ranges and reference ranges are kept so differences can
    be formed without going through the large-magnitude L values.
    """

    frame_index: int
    pseudo_ranges: np.ndarray
    reference_ranges: np.ndarray

    @property
    def L(self) -> np.ndarray:
        return self.pseudo_ranges + self.reference_ranges

    @property
    def count(self) -> int:
        return self.pseudo_ranges.shape[0]

    def diff(self, i: int, j: int) -> float:
        return float(
            (self.pseudo_ranges[i] - self.pseudo_ranges[j])
            + (self.reference_ranges[i] - self.reference_ranges[j])
        )

    def pivot_diffs(self, pivot: int) -> np.ndarray:
        """L_i - L_pivot for every i (zero at the pivot)."""
        return (self.pseudo_ranges - self.pseudo_ranges[pivot]) + (
            self.reference_ranges - self.reference_ranges[pivot]
        )


@dataclass(frozen=True, eq=False)
class DifferenceSet:
    frame_index: int
    pivot: int
    stations: Tuple[int, ...]
    diffs: np.ndarray

    def full(self) -> np.ndarray:
        """Differences as a per-station vector with 0 at the pivot."""
        out = np.zeros(len(self.stations) + 1)
        out[list(self.stations)] = self.diffs
        return out


def augment(frame: Frame, stations: StationArray) -> AugmentedFrame:
    r = np.asarray(frame.pseudo_ranges, dtype=float)
    if r.shape != (stations.count,):
        raise InvalidInput(f"frame has {r.shape[0]} pseudo-ranges for {stations.count} stations")
    return AugmentedFrame(frame.frame_index, r, stations.reference_ranges)


def pairwise_diff(aug: AugmentedFrame, pivot: int = 0) -> DifferenceSet:
    if not 0 <= pivot < aug.count:
        raise InvalidInput(f"pivot {pivot} out of range for {aug.count} stations")
    others = tuple(i for i in range(aug.count) if i != pivot)
    full = aug.pivot_diffs(pivot)
    return DifferenceSet(aug.frame_index, pivot, others, full[list(others)])


def all_pairs_diff(aug: AugmentedFrame) -> List[Tuple[int, int, float]]:
    """(i, j, L_i - L_j) for every unordered pair i < j."""
    if aug.count < 2:
        raise InvalidInput("need at least two stations")
    return [(i, j, aug.diff(i, j)) for i, j in combinations(range(aug.count), 2)]


def pivot_differences(traj: Trajectory, stations: StationArray, pivot: int = 0) -> np.ndarray:
    """Vectorised ``pairwise_diff`` over a trajectory: (frames, stations), zero column at pivot."""
    if traj.station_count != stations.count:
        raise InvalidInput("trajectory and station array disagree on station count")
    if not 0 <= pivot < stations.count:
        raise InvalidInput(f"pivot {pivot} out of range")
    r = traj.pseudo_ranges
    ref = stations.reference_ranges
    return (r - r[:, pivot : pivot + 1]) + (ref - ref[pivot])


def pivot_pairs(count: int, pivot: int = 0) -> List[Tuple[int, int]]:
    return [(i, pivot) for i in range(count) if i != pivot]


def all_pairs(count: int) -> List[Tuple[int, int]]:
    return list(combinations(range(count), 2))
