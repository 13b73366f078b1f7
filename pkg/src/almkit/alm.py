"""Safeguarded augmented Lagrangian engine for nonsmooth constrained problems.

The engine drives an abstract problem

    min f(x)  s.t.  g(x) <= 0 (componentwise),  h(x) = 0,  x in C,

where the abstract constraint ``x in C`` is enforced by the subproblem
solver. Objective and constraint values arrive packaged in
:class:`ProblemEval` bundles produced by the application; the engine
itself never evaluates problem functions. Multiplier estimates fed to
the subproblems are projections of the Lagrange multipliers onto
bounded boxes, and the penalty parameter grows geometrically whenever
the feasibility-complementarity measure fails to shrink by the factor
``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TraceRow = tuple[int, int, float, float, float]

TRACE_HEADER = "k,inner_iters,rho,V,f"


@dataclass
class ProblemEval:
    """Objective and constraint values at one iterate.

    ``f_value`` and entries of ``g_values`` may be ``+inf`` (never
    ``-inf`` or NaN); ``h_values`` must be finite.
    """

    f_value: float
    g_values: np.ndarray
    h_values: np.ndarray

    def __post_init__(self):
        self.g_values = np.asarray(self.g_values, dtype=np.float64).ravel()
        self.h_values = np.asarray(self.h_values, dtype=np.float64).ravel()
        if math.isnan(self.f_value) or self.f_value == -math.inf:
            raise ValueError("f_value must be finite or +inf")
        if np.isnan(self.g_values).any() or (self.g_values == -math.inf).any():
            raise ValueError("g_values must be finite or +inf")
        if not np.all(np.isfinite(self.h_values)):
            raise ValueError("h_values must be finite")


@dataclass
class AlmConfig:
    rho0: float = 1.0
    tau: float = 0.5
    gamma: float = 2.0
    multiplier_box_max: float = 1e8
    equality_box_max: float = 1e8
    eps_alm_abs: float = 1e-8
    max_outer_iterations: int = 100
    # per-iteration inner tolerance handed to the subproblem solver;
    # applications may interpret it as an iteration budget instead
    inner_tolerance: Callable[[int], float] = field(default=lambda k: 0.0)

    def __post_init__(self):
        if self.rho0 <= 0.0:
            raise ValueError("rho0 must be positive")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.multiplier_box_max <= 0.0 or self.equality_box_max <= 0.0:
            raise ValueError("safeguard boxes must be positive")
        if self.eps_alm_abs < 0.0:
            raise ValueError("eps_alm_abs must be nonnegative")


@dataclass
class AlmState:
    """Mutable engine state plus the per-iteration trace."""

    iterate: object
    lam: np.ndarray
    mu: np.ndarray
    v: np.ndarray
    w: np.ndarray
    rho: float
    k: int = 0
    v_prev_measure: float = math.inf
    trace: list[TraceRow] = field(default_factory=list)


# Subproblem solver contract: called once per outer iteration with the
# safeguarded estimates, the penalty parameter, the previous iterate as
# warm start, and the inner tolerance; returns the new iterate (inside
# the abstract set C by construction), its evaluation bundle, and the
# inner iteration count.
SubproblemSolver = Callable[
    [np.ndarray, np.ndarray, float, object, float],
    tuple[object, ProblemEval, int],
]


def augmented_lagrangian_value(
    ev: ProblemEval, v: np.ndarray, w: np.ndarray, rho: float
) -> float:
    """Augmented Lagrangian f + (1/2rho) sum(max(0, v+rho g)^2 - v^2) + <w,h> + (rho/2)|h|^2.

    Returns ``+inf`` whenever f or any g component is ``+inf``.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    v = np.asarray(v, dtype=np.float64).ravel()
    if (v < 0.0).any():
        raise ValueError("inequality multiplier estimates must be nonnegative")
    if not math.isfinite(ev.f_value) or not np.all(np.isfinite(ev.g_values)):
        return math.inf
    shifted = np.maximum(0.0, v + rho * ev.g_values)
    total = ev.f_value + (shifted @ shifted - v @ v) / (2.0 * rho)
    if ev.h_values.size:
        w = np.asarray(w, dtype=np.float64).ravel()
        total += w @ ev.h_values + 0.5 * rho * (ev.h_values @ ev.h_values)
    return float(total)


def feasibility_measure(ev: ProblemEval, v: np.ndarray, rho: float) -> float:
    """Joint feasibility-complementarity measure.

    ``max(||max(g, -v/rho)||_inf, ||h||_2)``; ``+inf`` outside the domain
    of g. Zero exactly when g <= 0, v >= 0, v'g = 0, and h = 0.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if not np.all(np.isfinite(ev.g_values)):
        return math.inf
    v = np.asarray(v, dtype=np.float64).ravel()
    value = 0.0
    if ev.g_values.size:
        value = float(np.max(np.abs(np.maximum(ev.g_values, -v / rho))))
    if ev.h_values.size:
        value = max(value, float(np.linalg.norm(ev.h_values)))
    return value


def update_multipliers(
    ev: ProblemEval, v: np.ndarray, w: np.ndarray, rho: float
) -> tuple[np.ndarray, np.ndarray]:
    """Multiplier update: lam = max(0, v + rho g), mu = w + rho h.

    An iterate on the boundary of dom g (some g = +inf, possible for
    inexact subproblem solvers) yields an infinite multiplier there;
    the safeguard projection bounds it at the box maximum and the
    infinite feasibility measure forces the penalty increase, so the
    outer loop recovers on its own.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    lam = np.maximum(0.0, v + rho * ev.g_values)
    mu = w + rho * ev.h_values
    return lam, mu


def safeguard(
    lam: np.ndarray, mu: np.ndarray, config: AlmConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Project multipliers onto their bounded boxes."""
    v = np.clip(np.asarray(lam, dtype=np.float64), 0.0, config.multiplier_box_max)
    w = np.clip(
        np.asarray(mu, dtype=np.float64),
        -config.equality_box_max,
        config.equality_box_max,
    )
    return v, w


def update_penalty(
    v_now: float, v_prev: float, rho: float, k: int, config: AlmConfig
) -> float:
    """Keep rho when k = 0 or the measure shrank by factor tau, else grow by gamma."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if k == 0 or v_now <= config.tau * v_prev:
        return rho
    return config.gamma * rho


@dataclass
class AlmProblem:
    """Starting data the engine needs: initial iterate and multiplier sizes."""

    x0: object
    m: int
    h_dim: int = 0
    lambda0: np.ndarray | None = None
    mu0: np.ndarray | None = None


@dataclass
class AlmResult:
    iterate: object
    state: AlmState
    reason: str
    final_eval: ProblemEval | None = None

    @property
    def converged(self) -> bool:
        return self.reason == "converged"


def run_alm(problem: AlmProblem, solver: SubproblemSolver, config: AlmConfig) -> AlmResult:
    """Drive the safeguarded ALM loop until the measure drops below tolerance.

    Each outer iteration solves one subproblem at the safeguarded
    estimates, updates multipliers and penalty, and records the trace
    row ``(k, inner_iters, rho_k, V_k, f)``, where ``V_k`` is the
    measure at the fresh iterate with the estimates just used. The
    termination test compares exactly that measure against
    ``eps_alm_abs``.
    """
    lam = (
        np.zeros(problem.m)
        if problem.lambda0 is None
        else np.asarray(problem.lambda0, dtype=np.float64).ravel()
    )
    mu = (
        np.zeros(problem.h_dim)
        if problem.mu0 is None
        else np.asarray(problem.mu0, dtype=np.float64).ravel()
    )
    if lam.size != problem.m or mu.size != problem.h_dim:
        raise ValueError("multiplier start sizes do not match problem dimensions")
    if (lam < 0.0).any():
        raise ValueError("initial inequality multipliers must be nonnegative")

    state = AlmState(
        iterate=problem.x0,
        lam=lam,
        mu=mu,
        v=np.zeros(problem.m),
        w=np.zeros(problem.h_dim),
        rho=config.rho0,
    )
    final_eval: ProblemEval | None = None
    reason = "max_outer_iterations"
    for k in range(config.max_outer_iterations):
        state.k = k
        state.v, state.w = safeguard(state.lam, state.mu, config)
        inner_tol = config.inner_tolerance(k)
        try:
            iterate, ev, inner_iters = solver(
                state.v, state.w, state.rho, state.iterate, inner_tol
            )
        except Exception as err:
            raise RuntimeError(f"subproblem solver failed at outer iteration {k}") from err
        state.lam, state.mu = update_multipliers(ev, state.v, state.w, state.rho)
        v_now = feasibility_measure(ev, state.v, state.rho)
        state.trace.append((k, inner_iters, state.rho, v_now, ev.f_value))
        state.iterate = iterate
        final_eval = ev
        if v_now <= config.eps_alm_abs:
            reason = "converged"
            state.k = k + 1
            break
        state.rho = update_penalty(v_now, state.v_prev_measure, state.rho, k, config)
        state.v_prev_measure = v_now
        state.k = k + 1
    return AlmResult(iterate=state.iterate, state=state, reason=reason, final_eval=final_eval)


def trace_csv_rows(trace: Sequence[TraceRow]) -> list[str]:
    """Render trace rows under the stable header ``k,inner_iters,rho,V,f``."""
    lines = [TRACE_HEADER]
    for k, inner, rho, v, f in trace:
        lines.append(f"{k},{inner},{rho!r},{v!r},{f!r}")
    return lines
