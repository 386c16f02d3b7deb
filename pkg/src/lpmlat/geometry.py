"""Stations, measurement frames and the pseudo-range forward model.

A pseudo-range is the measured transponder range to one base station,
shifted by a clock offset shared by every station within one frame and
referenced to the range of a fixed reference station::

    R_i = O + |M - B_i| - |T - B_i|

Points are plain 1-D float arrays of length 2 or 3 (meters).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidInput

COINCIDENT_TOL = 1e-9


def as_point(coords, dimension: Optional[int] = None) -> np.ndarray:
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1 or p.shape[0] not in (2, 3):
        raise InvalidInput(f"point must have 2 or 3 coordinates, got shape {p.shape}")
    if dimension is not None and p.shape[0] != dimension:
        raise InvalidInput(f"expected a {dimension}-D point, got {p.shape[0]}-D")
    if not np.all(np.isfinite(p)):
        raise InvalidInput("point coordinates must be finite")
    return p


def distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True, eq=False)
class StationArray:
    """Fixed geometry: base stations ``bases`` (n, d) and the reference station."""

    bases: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        bases = np.array(self.bases, dtype=float)
        if bases.ndim != 2 or bases.shape[1] not in (2, 3):
            raise InvalidInput(f"bases must be an (n, 2) or (n, 3) array, got {bases.shape}")
        if bases.shape[0] < 3:
            raise InvalidInput(f"need at least 3 base stations, got {bases.shape[0]}")
        if not np.all(np.isfinite(bases)):
            raise InvalidInput("station coordinates must be finite")
        reference = as_point(self.reference, bases.shape[1])
        gaps = np.linalg.norm(bases[:, None, :] - bases[None, :, :], axis=-1)
        gaps[np.diag_indices_from(gaps)] = np.inf
        if gaps.min() <= COINCIDENT_TOL:
            raise InvalidInput("two base stations coincide")
        bases.setflags(write=False)
        reference = reference.copy()
        reference.setflags(write=False)
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "reference", reference)
        ref_ranges = np.linalg.norm(bases - reference, axis=1)
        ref_ranges.setflags(write=False)
        object.__setattr__(self, "_ref_ranges", ref_ranges)
        sq = np.einsum("ij,ij->i", bases, bases)
        sq.setflags(write=False)
        object.__setattr__(self, "_squared_norms", sq)

    @property
    def count(self) -> int:
        return self.bases.shape[0]

    @property
    def dimension(self) -> int:
        return self.bases.shape[1]

    @property
    def reference_ranges(self) -> np.ndarray:
        """|T - B_i| for every base station."""
        return self._ref_ranges

    @property
    def squared_norms(self) -> np.ndarray:
        """|B_i|^2 for every base station."""
        return self._squared_norms

    def ranges(self, position) -> np.ndarray:
        """|M - B_i| for every base station."""
        return np.linalg.norm(self.bases - as_point(position, self.dimension), axis=1)

    def __eq__(self, other):
        if not isinstance(other, StationArray):
            return NotImplemented
        return np.array_equal(self.bases, other.bases) and np.array_equal(
            self.reference, other.reference
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Frame:
    """One measurement epoch: a pseudo-range per base station."""

    frame_index: int
    pseudo_ranges: np.ndarray
    true_offset: Optional[float] = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise InvalidInput("frame_index must be non-negative")
        r = np.array(self.pseudo_ranges, dtype=float)
        if r.ndim != 1 or not np.all(np.isfinite(r)):
            raise InvalidInput("pseudo_ranges must be a finite 1-D sequence")
        r.setflags(write=False)
        object.__setattr__(self, "pseudo_ranges", r)

    def shifted(self, c: float) -> "Frame":
        """Same frame with ``c`` added to every pseudo-range."""
        offset = None if self.true_offset is None else self.true_offset + c
        return Frame(self.frame_index, self.pseudo_ranges + c, offset)

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and np.array_equal(self.pseudo_ranges, other.pseudo_ranges)
            and self.true_offset == other.true_offset
        )

    __hash__ = None


@dataclass(eq=False)
class Trajectory:
    """A run of frames, stored column-wise.

    ``pseudo_ranges`` is (frames, stations); ``truth`` (frames, d) and
    ``offsets`` (frames,) are present for synthetic data only.
    """

    pseudo_ranges: np.ndarray
    truth: Optional[np.ndarray] = None
    offsets: Optional[np.ndarray] = None
    frame_indices: np.ndarray = field(default=None)

    def __post_init__(self):
        self.pseudo_ranges = np.asarray(self.pseudo_ranges, dtype=float)
        if self.pseudo_ranges.ndim != 2:
            raise InvalidInput("pseudo_ranges must be (frames, stations)")
        n = self.pseudo_ranges.shape[0]
        if self.frame_indices is None:
            self.frame_indices = np.arange(n)
        else:
            self.frame_indices = np.asarray(self.frame_indices, dtype=int)
        if self.frame_indices.shape != (n,):
            raise InvalidInput("one frame index per frame required")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=float)
            if self.truth.shape[0] != n:
                raise InvalidInput("truth must have one point per frame")
        if self.offsets is not None:
            self.offsets = np.asarray(self.offsets, dtype=float)
            if self.offsets.shape != (n,):
                raise InvalidInput("offsets must have one value per frame")

    @classmethod
    def from_frames(cls, frames: Sequence[Frame], truth=None) -> "Trajectory":
        frames = list(frames)
        offsets = None
        if frames and all(f.true_offset is not None for f in frames):
            offsets = np.array([f.true_offset for f in frames])
        return cls(
            np.array([f.pseudo_ranges for f in frames]),
            truth=None if truth is None else np.asarray(truth, dtype=float),
            offsets=offsets,
            frame_indices=np.array([f.frame_index for f in frames], dtype=int),
        )

    @property
    def station_count(self) -> int:
        return self.pseudo_ranges.shape[1]

    def __len__(self) -> int:
        return self.pseudo_ranges.shape[0]

    def __getitem__(self, k: int) -> Frame:
        offset = None if self.offsets is None else float(self.offsets[k])
        return Frame(int(self.frame_indices[k]), self.pseudo_ranges[k], offset)

    def __iter__(self) -> Iterator[Frame]:
        for k in range(len(self)):
            yield self[k]

    @property
    def frames(self) -> list:
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(a, b)

        return (
            same(self.pseudo_ranges, other.pseudo_ranges)
            and same(self.frame_indices, other.frame_indices)
            and same(self.truth, other.truth)
            and same(self.offsets, other.offsets)
        )

    __hash__ = None


def forward_pseudo_range(
    stations: StationArray, transponder, offset: float, frame_index: int = 0
) -> Frame:
    """Noise-free pseudo-ranges of ``transponder`` under clock offset ``offset``."""
    m = as_point(transponder, stations.dimension)
    # geometric part first so the large offset is added to an O(10 m) quantity once
    geometric = stations.ranges(m) - stations.reference_ranges
    return Frame(frame_index, offset + geometric, float(offset))
