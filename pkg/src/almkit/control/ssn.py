"""Semismooth Newton solver for the augmented sparsity-penalized subproblem.

The subproblem couples the discrete state equation, the adjoint
equation, and a soft-threshold relation between adjoint and control
through a scalar threshold beta driven by the budget constraint. After
eliminating the control via the shrinkage operator, the optimality
residual lives in (y, p, beta) and its generalized derivative is a
sparse (2N+1) system solved directly in every Newton step. Reapplying
the shrinkage after each step keeps the control consistent with
(p, beta), which in turn makes the active-set signs exact and the
Newton matrix invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..numkit import sparse_solve
from .fem import FemSystem


@dataclass
class SubproblemParams:
    rho: float
    v: float
    kappa: float
    sigma: float

    def __post_init__(self):
        if self.rho <= 0.0 or self.kappa <= 0.0 or self.sigma <= 0.0:
            raise ValueError("rho, kappa, sigma must be positive")
        if self.v < 0.0:
            raise ValueError("multiplier estimate must be nonnegative")


@dataclass
class ControlIterate:
    """State, control, adjoint, and threshold; u = S_sigma(p, beta) by construction."""

    y: np.ndarray
    u: np.ndarray
    p: np.ndarray
    beta: float


class SsnIterationError(RuntimeError):
    """Newton loop exceeded its iteration cap."""


def shrinkage(a, b, sigma: float):
    """Soft-threshold map max(0, (a-b+)/sigma) + min(0, (a+b+)/sigma).

    ``b+`` is the positive part of the threshold; inputs with
    ``|a| <= b+`` land in the dead zone and map to zero. Works
    elementwise on arrays.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    b_plus = max(0.0, b) if np.isscalar(b) else np.maximum(0.0, b)
    return np.maximum(0.0, (a - b_plus) / sigma) + np.minimum(0.0, (a + b_plus) / sigma)


@dataclass
class ActivePattern:
    """Strictly-active index sets and kink flags at one iterate.

    ``i1`` collects nodes with p - beta+ > 0, ``i2`` those with
    p + beta+ < 0; both max(0, .) kinks take derivative 1 on the
    ">= 0" branch.
    """

    i1: np.ndarray
    i2: np.ndarray
    theta1: float
    theta2_tilde: float

    @classmethod
    def from_iterate(
        cls, z: ControlIterate, params: SubproblemParams, fem: FemSystem
    ) -> "ActivePattern":
        beta_plus = max(0.0, z.beta)
        i1 = z.p - beta_plus > 0.0
        i2 = z.p + beta_plus < 0.0
        theta1 = 1.0 if z.beta >= 0.0 else 0.0
        u_shrunk = shrinkage(z.p, z.beta, params.sigma)
        budget = params.v + params.rho * (fem.lumped @ np.abs(u_shrunk) - params.kappa)
        theta2_tilde = 1.0 if budget >= 0.0 else 0.0
        return cls(i1=i1, i2=i2, theta1=theta1, theta2_tilde=theta2_tilde)


def residual(
    z: ControlIterate, params: SubproblemParams, fem: FemSystem
) -> tuple[np.ndarray, float]:
    """Stacked optimality residual (adjoint, state, threshold) and its norm."""
    r1 = fem.stiffness @ z.p + fem.mass @ (z.y - fem.y_d_h)
    r2 = fem.stiffness @ z.y - fem.lumped * z.u
    budget = params.v + params.rho * (fem.lumped @ np.abs(z.u) - params.kappa)
    r3 = z.beta - max(0.0, budget)
    stacked = np.concatenate([r1, r2, [r3]])
    return stacked, float(np.linalg.norm(stacked))


def newton_system(
    z: ControlIterate, pattern: ActivePattern, params: SubproblemParams, fem: FemSystem
) -> sp.csr_matrix:
    """Generalized derivative of the reduced residual in (dy, dp, dbeta)."""
    n = fem.n_interior
    sigma = params.sigma
    chi = (pattern.i1 | pattern.i2).astype(np.float64)
    chi_signed = pattern.i1.astype(np.float64) - pattern.i2.astype(np.float64)
    ml = fem.lumped

    block_pp = sp.diags(-ml * chi / sigma)
    col_beta = sp.csr_matrix((pattern.theta1 / sigma * ml * chi_signed).reshape(n, 1))
    row_p = sp.csr_matrix(
        (-params.rho * pattern.theta2_tilde / sigma * np.sign(z.u) * ml * chi).reshape(1, n)
    )
    corner = 1.0 + params.rho * pattern.theta2_tilde * pattern.theta1 / sigma * float(
        np.sum(ml[chi > 0.0])
    )
    k = fem.stiffness.csr
    m = fem.mass.csr
    return sp.bmat(
        [
            [m, k, None],
            [k, block_pp, col_beta],
            [None, row_p, sp.csr_matrix([[corner]])],
        ],
        format="csr",
    )


def full_newton_system(
    z: ControlIterate, params: SubproblemParams, fem: FemSystem
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Four-block derivative in (dy, du, dp, dbeta) with its right-hand side.

    Kept as the independent route for checking the reduced step; the
    production path always solves the reduced system.
    """
    n = fem.n_interior
    sigma = params.sigma
    pattern = ActivePattern.from_iterate(z, params, fem)
    chi = (pattern.i1 | pattern.i2).astype(np.float64)
    chi_signed = pattern.i1.astype(np.float64) - pattern.i2.astype(np.float64)
    ml = fem.lumped
    budget = params.v + params.rho * (ml @ np.abs(z.u) - params.kappa)
    theta2 = 1.0 if budget >= 0.0 else 0.0

    k = fem.stiffness.csr
    m = fem.mass.csr
    eye = sp.identity(n, format="csr")
    col_beta = sp.csr_matrix((pattern.theta1 / sigma * chi_signed).reshape(n, 1))
    row_u = sp.csr_matrix((-params.rho * theta2 * np.sign(z.u) * ml).reshape(1, n))
    matrix = sp.bmat(
        [
            [m, None, k, None],
            [None, eye, sp.diags(-chi / sigma), col_beta],
            [k, sp.diags(-ml), None, None],
            [None, row_u, None, sp.csr_matrix([[1.0]])],
        ],
        format="csr",
    )
    r1 = k @ z.p + m @ (z.y - fem.y_d_h)
    r2 = z.u - shrinkage(z.p, z.beta, sigma)
    r3 = k @ z.y - ml * z.u
    r4 = z.beta - max(0.0, budget)
    rhs = -np.concatenate([r1, r2, r3, [r4]])
    return matrix, rhs


def full_reduced_step_deviation(
    z: ControlIterate, params: SubproblemParams, fem: FemSystem
) -> tuple[float, float]:
    """Solve both Newton systems and measure their disagreement.

    Returns the max-norm discrepancy of the shared (dy, dp, dbeta)
    block and of the full system's du against the control update
    reconstructed from the reduced step.
    """
    n = fem.n_interior
    pattern = ActivePattern.from_iterate(z, params, fem)
    r, _ = residual(z, params, fem)
    reduced = sparse_solve(newton_system(z, pattern, params, fem), -r)
    dy_r, dp_r, db_r = reduced[:n], reduced[n : 2 * n], reduced[-1]

    matrix, rhs = full_newton_system(z, params, fem)
    full = sparse_solve(matrix, rhs)
    dy_f, du_f, dp_f, db_f = full[:n], full[n : 2 * n], full[2 * n : 3 * n], full[-1]

    step_dev = max(
        float(np.max(np.abs(dy_r - dy_f))),
        float(np.max(np.abs(dp_r - dp_f))),
        abs(db_r - db_f),
    )
    chi = (pattern.i1 | pattern.i2).astype(np.float64)
    chi_signed = pattern.i1.astype(np.float64) - pattern.i2.astype(np.float64)
    du_expected = (chi * dp_r - pattern.theta1 * db_r * chi_signed) / params.sigma
    control_dev = float(np.max(np.abs(du_f - du_expected)))
    return step_dev, control_dev


def ssn_solve(
    start: tuple[np.ndarray, np.ndarray, float],
    params: SubproblemParams,
    fem: FemSystem,
    eps_ssn: float,
    max_iterations: int = 50,
) -> tuple[ControlIterate, int, list[float]]:
    """Local Newton iteration on the reduced optimality system.

    ``start`` provides (y, p, beta); the control starts as
    S_sigma(p, beta) and is recomputed from the tentative (p, beta)
    after every step. No globalization: the loop either meets the
    residual tolerance or raises after ``max_iterations`` steps.
    """
    if eps_ssn <= 0.0:
        raise ValueError("eps_ssn must be positive")
    y0, p0, beta0 = start
    y = np.array(y0, dtype=np.float64, copy=True)
    p = np.array(p0, dtype=np.float64, copy=True)
    beta = float(beta0)
    u = shrinkage(p, beta, params.sigma)
    history: list[float] = []
    n = fem.n_interior
    for iteration in range(max_iterations + 1):
        z = ControlIterate(y=y, u=u, p=p, beta=beta)
        r, norm = residual(z, params, fem)
        history.append(norm)
        if norm <= eps_ssn:
            return z, iteration, history
        if iteration == max_iterations:
            break
        pattern = ActivePattern.from_iterate(z, params, fem)
        delta = sparse_solve(newton_system(z, pattern, params, fem), -r)
        y = y + delta[:n]
        p = p + delta[n : 2 * n]
        beta = beta + float(delta[-1])
        u = shrinkage(p, beta, params.sigma)
    raise SsnIterationError(
        f"no convergence within {max_iterations} Newton iterations "
        f"(residual {history[-1]:.3e}, tolerance {eps_ssn:.3e})"
    )
