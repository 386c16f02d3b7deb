"""Path-error metrics."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import NoData


def path_errors(fixes: Sequence, truth: np.ndarray, delay: int = 0) -> np.ndarray:
    """Euclidean error of each fix against truth at ``frame_index - delay``.

    Warm-up, degenerate and position-less fixes, and fixes whose delayed
    epoch falls outside the truth sequence, get NaN.
    """
    truth = np.asarray(truth, dtype=float)
    out = np.full(len(fixes), np.nan)
    for n, fix in enumerate(fixes):
        if fix.warmup or fix.degenerate or fix.position is None:
            continue
        epoch = fix.frame_index - delay
        if 0 <= epoch < truth.shape[0]:
            out[n] = np.linalg.norm(np.asarray(fix.position) - truth[epoch])
    return out


def mean_path_error(fixes: Sequence, truth: np.ndarray, delay: int = 0) -> float:
    """Arithmetic mean of ``path_errors`` over the included frames."""
    errs = path_errors(fixes, truth, delay)
    errs = errs[np.isfinite(errs)]
    if errs.size == 0:
        raise NoData("no frames left to score")
    return float(errs.mean())
