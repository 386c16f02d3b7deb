from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class Fix:
    """A solved frame.

    ``offset`` is None for the TDOA solvers, which never model it, and
    ``condition_number`` is NaN for the iterative solvers. ``position`` is
    None when the system was singular.
    """

    frame_index: int
    position: Optional[np.ndarray]
    offset: Optional[float]
    residual_norm: float
    condition_number: float = np.nan
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    warmup: bool = False

    @classmethod
    def failed(cls, frame_index: int, dimension: int) -> "Fix":
        return cls(frame_index, None, None, np.nan, np.inf, 0, False, True)

    @classmethod
    def warming_up(cls, frame_index: int) -> "Fix":
        return cls(frame_index, None, None, np.nan, np.nan, 0, False, False, True)

    def __eq__(self, other):
        if not isinstance(other, Fix):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(a, b, equal_nan=True)

        return (
            self.frame_index == other.frame_index
            and same(self.position, other.position)
            and same(
                None if self.offset is None else np.float64(self.offset),
                None if other.offset is None else np.float64(other.offset),
            )
            and same(np.float64(self.residual_norm), np.float64(other.residual_norm))
            and same(np.float64(self.condition_number), np.float64(other.condition_number))
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.degenerate == other.degenerate
            and self.warmup == other.warmup
        )

    __hash__ = None
