"""Sparsity-budgeted optimal control of the Dirichlet Laplacian."""

from .driver import (
    ControlConfig,
    ControlResult,
    KktReport,
    default_desired_state,
    initial_triple,
    objective_value,
    solve_sparse_control,
    solve_tikhonov,
    superlinear_history,
    verify_kkt,
)
from .fem import FemSystem, assemble_fem, assemble_full, interior_indices, p1_interpolate
from .ssn import (
    ActivePattern,
    ControlIterate,
    SsnIterationError,
    SubproblemParams,
    full_newton_system,
    full_reduced_step_deviation,
    newton_system,
    residual,
    shrinkage,
    ssn_solve,
)

__all__ = [
    "ActivePattern",
    "ControlConfig",
    "ControlIterate",
    "ControlResult",
    "FemSystem",
    "KktReport",
    "SsnIterationError",
    "SubproblemParams",
    "assemble_fem",
    "assemble_full",
    "default_desired_state",
    "full_newton_system",
    "full_reduced_step_deviation",
    "initial_triple",
    "interior_indices",
    "newton_system",
    "objective_value",
    "p1_interpolate",
    "residual",
    "shrinkage",
    "solve_sparse_control",
    "solve_tikhonov",
    "ssn_solve",
    "superlinear_history",
    "verify_kkt",
]
