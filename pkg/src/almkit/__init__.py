"""Safeguarded augmented Lagrangian toolkit.

A generic outer loop for nonsmooth problems with finitely many
inequality constraints plus two complete applications: multiscale
variational Poisson denoising (stochastic first-order subproblem
solver) and sparsity-budgeted optimal control of the Dirichlet
Laplacian (semismooth Newton subproblem solver).
"""

from .alm import (
    AlmConfig,
    AlmProblem,
    AlmResult,
    AlmState,
    ProblemEval,
    augmented_lagrangian_value,
    feasibility_measure,
    run_alm,
    safeguard,
    update_multipliers,
    update_penalty,
)

__all__ = [
    "AlmConfig",
    "AlmProblem",
    "AlmResult",
    "AlmState",
    "ProblemEval",
    "augmented_lagrangian_value",
    "feasibility_measure",
    "run_alm",
    "safeguard",
    "update_multipliers",
    "update_penalty",
]

__version__ = "0.1.0"
