"""End-to-end variational Poisson denoising.

The candidate image is the optimization iterate; every sub-square box
yields one divergence constraint, all of which are augmented. Each
subproblem runs a fixed budget of stochastic adaptive-moment steps
whose gradient samples a random subset of scales, growing by one scale
per outer iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..alm import AlmConfig, AlmProblem, AlmResult, ProblemEval, run_alm
from ..numkit import Rng
from .boxes import BoxSystem, estimate_quantile
from .gradient import constraint_values, stochastic_al_gradient
from .grids import CountsGrid, IntensityGrid
from .nadam import nadam_minimize
from .sobolev import sobolev_value_grad

METRICS_HEADER = "k,f,violated_fraction,max_rel_violation,mean_rel_violation,V,rho"


@dataclass
class DenoiseConfig:
    alpha: float = 0.1
    q_tilde: float | None = None
    sobolev_s: float = 0.01
    boundary_slope: float = -10.0
    nadam_iterations: int = 300
    initial_scale_count: int = 10
    stepsize_floor: float = 0.005
    stepsize_decay: float = 0.8
    rho0: float = 4.0
    tau: float = 0.9
    gamma: float = 4.0
    multiplier_box_max: float = 1e8
    eps_alm_abs: float = 1e-2
    max_outer_iterations: int = 50
    mc_samples: int = 1000
    seed: int = 0
    r_shift: float = 0.0
    scales: Sequence[int] | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.sobolev_s < 0.0:
            raise ValueError("smoothness exponent must be nonnegative")
        if self.boundary_slope >= 0.0:
            raise ValueError("boundary slope must be negative")


@dataclass
class MetricsRow:
    k: int
    f: float
    violated_fraction: float
    max_rel_violation: float
    mean_rel_violation: float
    V: float
    rho: float

    def csv(self) -> str:
        return (
            f"{self.k},{self.f!r},{self.violated_fraction!r},"
            f"{self.max_rel_violation!r},{self.mean_rel_violation!r},{self.V!r},{self.rho!r}"
        )


@dataclass
class DenoiseResult:
    reconstruction: IntensityGrid
    alm: AlmResult
    metrics: list[MetricsRow]
    q_tilde: float
    initial_f: float
    initial_violated_fraction: float
    box_count: int

    @property
    def converged(self) -> bool:
        return self.alm.converged


def _constraint_metrics(g: np.ndarray, rhs: np.ndarray) -> tuple[float, float, float]:
    violated = float(np.mean(g > 0.0))
    with np.errstate(invalid="ignore"):
        rel = g / rhs
    max_rel = float(np.max(rel))
    mean_rel = float(np.mean(np.maximum(rel, 0.0))) if np.all(np.isfinite(rel)) else math.inf
    return violated, max_rel, mean_rel


class _DenoiseSubproblem:
    """Stateful solver callback: one call per outer iteration.

    The optimization variable is the image at counts scale (expected
    counts per pixel), matching the raw observation it starts from; the
    descent stepsizes, the multiplier box, and the termination
    tolerance are all calibrated to that range. The constraint family
    is identical to its per-unit-area formulation because the
    divergence is positively homogeneous.
    """

    def __init__(self, counts: np.ndarray, system: BoxSystem, config: DenoiseConfig, rng: Rng):
        self.counts = counts
        self.system = system
        self.config = config
        self.rng = rng
        self.outer_k = 0
        self.metrics: list[tuple[float, float, float]] = []
        # objective normalization: at exponent 0 the value is exactly the
        # sum of squared pixels, which puts the smoothness force on the
        # same footing as the constraint terms at counts scale
        self.f_scale = float(system.n) ** 4

    def evaluate(self, w: np.ndarray) -> tuple[ProblemEval, tuple[float, float, float]]:
        f_value, _ = sobolev_value_grad(w, self.config.sobolev_s)
        g = constraint_values(w, self.counts, self.system)
        ev = ProblemEval(f_value=self.f_scale * f_value, g_values=g, h_values=np.zeros(0))
        return ev, _constraint_metrics(g, self.system.rhs_counts_vector())

    def __call__(self, v_flat, w_mult, rho, warm_w, inner_budget):
        k = self.outer_k
        cfg = self.config
        stepsize = max(cfg.stepsize_floor, cfg.stepsize_decay**k)
        scales = self.system.scales
        pick = min(len(scales), cfg.initial_scale_count + k)
        v_by_scale = self.system.split_flat(v_flat)
        scale_array = np.asarray(scales)

        def grad(w, rng):
            chosen = scale_array[rng.subset(len(scales), pick)]
            return stochastic_al_gradient(
                w,
                self.counts,
                self.system,
                v_by_scale,
                rho,
                chosen,
                cfg.sobolev_s,
                cfg.boundary_slope,
                sobolev_scale=self.f_scale,
            )

        iterations = max(1, int(round(inner_budget)))
        w_new = nadam_minimize(warm_w, grad, iterations, stepsize, self.rng.spawn(2 + k))
        ev, metric = self.evaluate(w_new)
        self.metrics.append(metric)
        self.outer_k += 1
        return w_new, ev, iterations


def denoise(observation: CountsGrid, config: DenoiseConfig) -> DenoiseResult:
    """Reconstruct an intensity image from Poisson counts.

    The noisy observation rescaled by pixel area is the starting image.
    Calibrates the quantile by Monte Carlo when the config does not
    supply one.
    """
    rng = Rng(config.seed)
    n = observation.n
    q_tilde = config.q_tilde
    if q_tilde is None:
        bare = BoxSystem(n, scales=config.scales)
        q_tilde = estimate_quantile(bare, config.alpha, config.mc_samples, rng.spawn(1))
    system = BoxSystem(n, q_tilde=q_tilde, scales=config.scales, r_shift=config.r_shift)

    solver = _DenoiseSubproblem(observation.counts, system, config, rng)
    x0 = observation.counts.astype(np.float64)
    ev0, metrics0 = solver.evaluate(x0)

    alm_config = AlmConfig(
        rho0=config.rho0,
        tau=config.tau,
        gamma=config.gamma,
        multiplier_box_max=config.multiplier_box_max,
        eps_alm_abs=config.eps_alm_abs,
        max_outer_iterations=config.max_outer_iterations,
        inner_tolerance=lambda k: float(config.nadam_iterations),
    )
    result = run_alm(AlmProblem(x0=x0, m=system.total_boxes), solver, alm_config)

    rows = []
    for (k, _, rho, v_measure, f_value), metric in zip(result.state.trace, solver.metrics):
        rows.append(MetricsRow(k, f_value, metric[0], metric[1], metric[2], v_measure, rho))
    return DenoiseResult(
        reconstruction=IntensityGrid(n, result.iterate / observation.pixel_area),
        alm=result,
        metrics=rows,
        q_tilde=q_tilde,
        initial_f=ev0.f_value,
        initial_violated_fraction=metrics0[0],
        box_count=system.total_boxes,
    )
