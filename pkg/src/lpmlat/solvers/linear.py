"""Closed-form linear least-squares multilateration.

Squaring |M - B_i| = L_i - O and subtracting the equation of station j
removes |M|^2 and O^2, leaving one linear row per station pair::

    (B_i - B_j) . M - (L_i - L_j) O = 1/2 (|B_i|^2 - |B_j|^2 - (L_i^2 - L_j^2))

The rows only depend on L through L - O, so every L_i and O may be
shifted by the same constant without changing the system. Systems are
built with the pivot station's L as that shift: the unknown becomes
O - L_pivot (a few meters instead of ~1e7) and L_i^2 - L_j^2 is formed
from O(10 m) quantities, which is what keeps noise-free recovery exact to
~1e-12 m. ``shift=0.0`` gives the unshifted textbook rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InvalidInput, Underdetermined
from ..geometry import StationArray
from ..transform import AugmentedFrame, all_pairs, pivot_pairs
from .fix import Fix

_EPS = np.finfo(float).eps

PairSelection = Union[str, Sequence[Tuple[int, int]]]


@dataclass(frozen=True)
class LinearConfig:
    """Degeneracy thresholds.

    ``max_condition`` applies to the 2-norm condition number of the
    column-equilibrated, unweighted coefficient matrix. ``min_pivot_ratio``
    bounds the smallest column norm relative to the largest: a vanishing
    offset column (all L_i - L_j ~ 0) or coordinate column (stations
    sharing one coordinate) is invisible after equilibration but leaves the
    corresponding unknown undetermined.
    """

    max_condition: float = 1e3
    min_pivot_ratio: float = 1e-6


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Rows are satisfied by ``(M, O - shift)``."""

    A: np.ndarray
    b: np.ndarray
    row_pairs: Tuple[Tuple[int, int], ...]
    shift: float
    frame_index: int = 0

    @property
    def dimension(self) -> int:
        return self.A.shape[1] - 1

    def unknowns(self, position, offset: float) -> np.ndarray:
        return np.append(np.asarray(position, dtype=float), offset - self.shift)

    def residual(self, position, offset: float) -> np.ndarray:
        return self.A @ self.unknowns(position, offset) - self.b


def _select_pairs(pairs: PairSelection, count: int, pivot: int):
    if isinstance(pairs, str):
        if pairs == "pivot":
            return pivot_pairs(count, pivot)
        if pairs == "all":
            return all_pairs(count)
        raise InvalidInput(f"unknown pair selection {pairs!r}")
    out = [(int(i), int(j)) for i, j in pairs]
    for i, j in out:
        if i == j or not (0 <= i < count and 0 <= j < count):
            raise InvalidInput(f"invalid station pair ({i}, {j})")
    return out


@lru_cache(maxsize=64)
def _pair_index(pairs):
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def build_from_shifted(
    shifted_L: np.ndarray,
    stations: StationArray,
    pairs,
    shift: float,
    frame_index: int = 0,
) -> LinearSystem:
    """Rows from L - shift values (one per station)."""
    d = stations.dimension
    if len(pairs) < d + 1:
        raise Underdetermined(f"{len(pairs)} station pairs cannot determine {d + 1} unknowns")
    B = stations.bases
    sq = stations.squared_norms
    i, j = _pair_index(tuple(pairs))
    dL = shifted_L[i] - shifted_L[j]
    A = np.empty((len(pairs), d + 1))
    A[:, :d] = B[i] - B[j]
    A[:, d] = -dL
    b = 0.5 * ((sq[i] - sq[j]) - dL * (shifted_L[i] + shifted_L[j]))
    return LinearSystem(A, b, tuple(pairs), float(shift), frame_index)


def build_linear_system(
    aug: AugmentedFrame,
    stations: StationArray,
    pairs: PairSelection = "pivot",
    pivot: int = 0,
    shift: Optional[float] = None,
) -> LinearSystem:
    """Linear system for one frame.

    ``shift`` defaults to L_pivot (see module docstring); pass 0.0 for the
    unshifted form.
    """
    if aug.count != stations.count:
        raise InvalidInput("frame and station array disagree on station count")
    if not 0 <= pivot < aug.count:
        raise InvalidInput(f"pivot {pivot} out of range")
    chosen = _select_pairs(pairs, aug.count, pivot)
    L_pivot = aug.pseudo_ranges[pivot] + aug.reference_ranges[pivot]
    if shift is None:
        shifted = aug.pivot_diffs(pivot)
        shift = L_pivot
    else:
        shifted = aug.pivot_diffs(pivot) + (L_pivot - shift)
    return build_from_shifted(shifted, stations, chosen, shift, aug.frame_index)


def _equilibrated_condition(A) -> float:
    scale = np.sqrt(np.einsum("ij,ij->j", A, A))
    if scale.min() == 0.0:
        return math.inf
    s = np.linalg.svd(A / scale, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def _least_squares(A, b, shift, frame_index, config, unweighted=None) -> Fix:
    """Solve, judging degeneracy on ``unweighted`` (the geometry) when given."""
    rows, cols = A.shape
    d = cols - 1
    scale = np.sqrt(np.einsum("ij,ij->j", A, A))
    if not (math.isfinite(scale.sum()) and math.isfinite(b.sum())):
        return Fix.failed(frame_index, d)
    smallest = scale.min()
    if smallest == 0.0:
        return Fix(frame_index, None, None, math.nan, math.inf, 0, False, True)
    U, s, Vt = np.linalg.svd(A / scale, full_matrices=False)
    s0, s1 = float(s[0]), float(s[-1])
    cond = s0 / s1 if s1 > 0 else math.inf
    if s1 <= s0 * _EPS * rows:
        return Fix(frame_index, None, None, math.nan, cond, 0, False, True)
    if unweighted is not None:
        cond = _equilibrated_condition(unweighted)
        scale_u = np.sqrt(np.einsum("ij,ij->j", unweighted, unweighted))
        degenerate = cond > config.max_condition or scale_u.min() < config.min_pivot_ratio * scale_u.max()
    else:
        degenerate = cond > config.max_condition or smallest < config.min_pivot_ratio * scale.max()
    x = (Vt.T @ ((U.T @ b) / s)) / scale
    r = A @ x - b
    return Fix(frame_index, x[:d], float(x[d]) + shift, math.sqrt(r @ r), cond, 0, True, bool(degenerate))


def solve_linear(
    system: LinearSystem,
    weights: Optional[Sequence[float]] = None,
    config: LinearConfig = LinearConfig(),
) -> Fix:
    """Weighted least squares on ``diag(w) A x = diag(w) b``.

    Rank-deficient or ill-conditioned systems give a degenerate Fix; the
    position is withheld only when the system is exactly singular. The
    reported condition number and the degeneracy test use the unweighted
    rows: weights express trust in measurements, not geometry.
    """
    A, b = system.A, system.b
    rows, cols = A.shape
    if rows < cols:
        raise Underdetermined(f"{rows} rows for {cols} unknowns")
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (rows,) or not (w > 0).all() or not np.isfinite(w).all():
            raise InvalidInput("weights must be positive, finite, one per row")
        return _least_squares(
            A * w[:, None], b * w, float(system.shift), system.frame_index, config, unweighted=A
        )
    return _least_squares(A, b, float(system.shift), system.frame_index, config)


def corrected_measurements(aug: AugmentedFrame, filtered: np.ndarray, pivot: int = 0) -> np.ndarray:
    """Filter-corrected L - L_pivot for every station.

    ``filtered[i]`` is the filtered value of (L_i - L_pivot). The correction
    F_i = (L_i - L_pivot) - filtered[i] estimates alpha_i - alpha_pivot, so
    L_i - F_i = L~_i + alpha_pivot: every station now carries the pivot's
    noise, which is then absorbed into the offset unknown (O + alpha_pivot).
    """
    raw = aug.pivot_diffs(pivot)
    correction = raw - filtered
    correction[pivot] = 0.0
    return raw - correction


def solve_linear_filtered(
    aug: AugmentedFrame,
    stations: StationArray,
    filtered: Sequence[float],
    pivot: int = 0,
    weights: Optional[Sequence[float]] = None,
    pairs: PairSelection = "pivot",
    config: LinearConfig = LinearConfig(),
) -> Fix:
    """Linear solve on filter-corrected measurements.

    ``filtered`` holds one value per station, the filtered (L_i - L_pivot)
    for the epoch of ``aug`` (entry at the pivot is ignored). The returned
    offset is O + alpha_pivot.
    """
    f = np.asarray(filtered, dtype=float)
    if f.shape != (stations.count,):
        raise InvalidInput("need one filtered difference per station")
    f = f.copy()
    f[pivot] = 0.0
    shifted = corrected_measurements(aug, f, pivot)
    L_pivot = aug.pseudo_ranges[pivot] + aug.reference_ranges[pivot]
    chosen = _select_pairs(pairs, stations.count, pivot)
    system = build_from_shifted(shifted, stations, chosen, L_pivot, aug.frame_index)
    return solve_linear(system, weights, config)


class PivotSolver:
    """Pivot-pair linear solver with the station geometry precomputed.

    Equivalent to ``solve_linear_filtered(..., pairs="pivot")`` (or, with
    ``filtered=None``, to the raw linear solve) but without per-call
    validation; meant for solving many frames against one station array.
    """

    def __init__(self, stations: StationArray, pivot: int = 0, config: LinearConfig = LinearConfig()):
        if not 0 <= pivot < stations.count:
            raise InvalidInput(f"pivot {pivot} out of range")
        d = stations.dimension
        if stations.count - 1 < d + 1:
            raise Underdetermined(f"{stations.count - 1} station pairs cannot determine {d + 1} unknowns")
        self.pivot = pivot
        self.config = config
        self._others = np.array([i for i in range(stations.count) if i != pivot])
        self._ref = stations.reference_ranges
        self._ref_p = float(stations.reference_ranges[pivot])
        B = stations.bases
        sq = stations.squared_norms
        self._A = np.empty((stations.count - 1, d + 1))
        self._A[:, :d] = B[self._others] - B[pivot]
        self._half_dsq = 0.5 * (sq[self._others] - sq[pivot])

    def solve(self, pseudo_ranges: np.ndarray, filtered=None, weights=None, frame_index: int = 0) -> Fix:
        """``filtered`` holds the filtered L_i - L_pivot for the non-pivot stations."""
        o = self._others
        p = pseudo_ranges[self.pivot]
        if filtered is None:
            dL = (pseudo_ranges[o] - p) + (self._ref[o] - self._ref_p)
        else:
            dL = filtered
        A = self._A.copy()
        A[:, -1] = -dL
        b = self._half_dsq - 0.5 * dL * dL
        if weights is not None:
            return _least_squares(
                A * weights[:, None], b * weights, float(p) + self._ref_p, frame_index, self.config, A
            )
        return _least_squares(A, b, float(p) + self._ref_p, frame_index, self.config)
