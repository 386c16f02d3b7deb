"""Iterative solvers: Levenberg-Marquardt on TDOA residuals (position only)
and, as a baseline, on the raw TOA equations (position and offset).

Stopping rules, checked once per outer iteration:

* scaled gradient   |J^T r| * max(|x|, 1) / max(f, 1)  < scaled_gradient_tol
* relative decrease (f_prev - f) / max(f_prev, tiny)   < relative_improvement_tol
* scaled step       |dx| / max(|x|, 1)                  < scaled_step_tol
* max_iterations accepted or rejected trial steps

with f = |r|^2 / 2. Hitting the iteration cap is the only non-converged exit
apart from damping overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidInput
from ..geometry import StationArray, as_point
from ..transform import AugmentedFrame, all_pairs, pivot_pairs
from .fix import Fix

_TINY = np.finfo(float).tiny
_MAX_DAMPING = 1e16


@dataclass(frozen=True)
class LmConfig:
    scaled_gradient_tol: float = 1e-6
    relative_improvement_tol: float = 1e-5
    scaled_step_tol: float = 1e-3
    max_iterations: int = 20
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 10.0

    def __post_init__(self):
        for name in ("scaled_gradient_tol", "relative_improvement_tol", "scaled_step_tol", "initial_damping"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be > 0")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")
        if not (self.damping_up > 1 and self.damping_down > 1):
            raise InvalidInput("damping factors must be > 1")


@dataclass
class LmResult:
    x: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    reason: str


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: LmConfig = LmConfig(),
) -> LmResult:
    """Minimise |fun(x)|^2 / 2 with Marquardt's diagonal scaling."""
    x = np.array(x0, dtype=float)
    r = fun(x)
    f = 0.5 * float(r @ r)
    lam = cfg.initial_damping
    it = 0
    while it < cfg.max_iterations:
        J = jac(x)
        g = J.T @ r
        if np.linalg.norm(g) * max(np.linalg.norm(x), 1.0) / max(f, 1.0) < cfg.scaled_gradient_tol:
            return LmResult(x, r, it, True, "gradient")
        JtJ = J.T @ J
        diag = np.diag(JtJ).copy()
        diag[diag <= 0] = max(diag.max(), 1.0)
        while True:
            it += 1
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                x_new = x + step
                r_new = fun(x_new)
                f_new = 0.5 * float(r_new @ r_new)
                if np.isfinite(f_new) and f_new <= f:
                    break
            lam *= cfg.damping_up
            if lam > _MAX_DAMPING:
                return LmResult(x, r, it, False, "damping")
            if it >= cfg.max_iterations:
                return LmResult(x, r, it, False, "iterations")
        lam = max(lam / cfg.damping_down, 1e-12)
        improvement = (f - f_new) / max(f, _TINY)
        scaled_step = np.linalg.norm(step) / max(np.linalg.norm(x), 1.0)
        x, r, f = x_new, r_new, f_new
        if f == 0.0:
            return LmResult(x, r, it, True, "exact")
        if improvement < cfg.relative_improvement_tol:
            return LmResult(x, r, it, True, "improvement")
        if scaled_step < cfg.scaled_step_tol:
            return LmResult(x, r, it, True, "step")
    return LmResult(x, r, it, False, "iterations")


def _pairs(pairs, count: int, pivot: int):
    if isinstance(pairs, str):
        if pairs == "pivot":
            return pivot_pairs(count, pivot)
        if pairs == "all":
            return all_pairs(count)
        raise InvalidInput(f"unknown pair selection {pairs!r}")
    return [(int(i), int(j)) for i, j in pairs]


def _unit_vectors(position: np.ndarray, bases: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    delta = position - bases
    rho = np.linalg.norm(delta, axis=1)
    safe = np.where(rho > 1e-12, rho, 1.0)
    u = delta / safe[:, None]
    u[rho <= 1e-12] = 0.0
    return rho, u


def tdoa_residuals_from_diffs(position, diffs: np.ndarray, stations: StationArray, pairs) -> np.ndarray:
    """r_ij = (|M-B_i| - |M-B_j|) - D_ij, with ``diffs`` aligned to ``pairs``."""
    m = np.asarray(position, dtype=float)
    rho = np.linalg.norm(m - stations.bases, axis=1)
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    return (rho[i] - rho[j]) - np.asarray(diffs, dtype=float)


def tdoa_jacobian(position, stations: StationArray, pairs) -> np.ndarray:
    """Rows (M-B_i)/|M-B_i| - (M-B_j)/|M-B_j|."""
    _, u = _unit_vectors(np.asarray(position, dtype=float), stations.bases)
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    return u[i] - u[j]


def pair_diffs(aug: AugmentedFrame, pairs) -> np.ndarray:
    """L_i - L_j for each pair, formed offset-free."""
    return np.array([aug.diff(i, j) for i, j in pairs])


def tdoa_residuals(
    position, aug: AugmentedFrame, stations: StationArray, pairs="pivot", pivot: int = 0
) -> np.ndarray:
    chosen = _pairs(pairs, stations.count, pivot)
    return tdoa_residuals_from_diffs(position, pair_diffs(aug, chosen), stations, chosen)


def solve_tdoa_diffs(
    diffs: Sequence[float],
    stations: StationArray,
    pairs,
    start,
    cfg: LmConfig = LmConfig(),
    frame_index: int = 0,
) -> Fix:
    """LM over the position only, given range differences D_ij for ``pairs``."""
    d = np.asarray(diffs, dtype=float)
    x0 = as_point(start, stations.dimension)
    res = levenberg_marquardt(
        lambda m: tdoa_residuals_from_diffs(m, d, stations, pairs),
        lambda m: tdoa_jacobian(m, stations, pairs),
        x0,
        cfg,
    )
    return Fix(
        frame_index,
        res.x,
        None,
        float(np.linalg.norm(res.residuals)),
        np.nan,
        res.iterations,
        res.converged,
        False,
    )


def solve_nonlinear_tdoa(
    aug: AugmentedFrame,
    stations: StationArray,
    start,
    cfg: LmConfig = LmConfig(),
    pairs="pivot",
    pivot: int = 0,
) -> Fix:
    chosen = _pairs(pairs, stations.count, pivot)
    return solve_tdoa_diffs(pair_diffs(aug, chosen), stations, chosen, start, cfg, aug.frame_index)


def toa_residuals(position, offset: float, aug: AugmentedFrame, stations: StationArray) -> np.ndarray:
    """|M - B_i| - (L_i - O)."""
    rho = np.linalg.norm(np.asarray(position, dtype=float) - stations.bases, axis=1)
    return (rho + offset) - aug.L


def solve_nonlinear_toa(
    aug: AugmentedFrame,
    stations: StationArray,
    start_position,
    start_offset: Optional[float] = None,
    cfg: LmConfig = LmConfig(),
) -> Fix:
    """LM over (M, O) on the un-differenced equations.

    The offset is iterated as a correction to ``start_offset`` (default: the
    frame's mean L), so a good start keeps the unknowns O(10 m) while a poor
    one exposes the ~1e7 m offset to the step scaling.
    """
    dim = stations.dimension
    if start_offset is None:
        start_offset = float(np.mean(aug.L))
    base = float(start_offset)
    # L - base, formed from pseudo-ranges so the large terms cancel first
    rel = (aug.pseudo_ranges - base) + aug.reference_ranges

    def fun(x):
        rho = np.linalg.norm(x[:dim] - stations.bases, axis=1)
        return (rho + x[dim]) - rel

    def jac(x):
        _, u = _unit_vectors(x[:dim], stations.bases)
        return np.hstack([u, np.ones((stations.count, 1))])

    x0 = np.append(as_point(start_position, dim), 0.0)
    res = levenberg_marquardt(fun, jac, x0, cfg)
    return Fix(
        aug.frame_index,
        res.x[:dim],
        float(base + res.x[dim]),
        float(np.linalg.norm(res.residuals)),
        np.nan,
        res.iterations,
        res.converged,
        False,
    )
