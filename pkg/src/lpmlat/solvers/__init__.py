from .fix import Fix
from .linear import (
    LinearConfig,
    LinearSystem,
    PivotSolver,
    build_linear_system,
    corrected_measurements,
    solve_linear,
    solve_linear_filtered,
)
from .nonlinear import (
    LmConfig,
    levenberg_marquardt,
    solve_nonlinear_toa,
    solve_nonlinear_tdoa,
    solve_tdoa_diffs,
    tdoa_jacobian,
    tdoa_residuals,
    toa_residuals,
)

__all__ = [
    "Fix",
    "LinearConfig",
    "LinearSystem",
    "LmConfig",
    "PivotSolver",
    "build_linear_system",
    "corrected_measurements",
    "levenberg_marquardt",
    "solve_linear",
    "solve_linear_filtered",
    "solve_nonlinear_toa",
    "solve_nonlinear_tdoa",
    "solve_tdoa_diffs",
    "tdoa_jacobian",
    "tdoa_residuals",
    "toa_residuals",
]
