"""Variational Poisson denoising with multiscale divergence constraints."""

from .boxes import (
    BoxSystem,
    empirical_quantile,
    estimate_quantile,
    penalty_pen,
    rhs_r,
    sample_max_statistics,
)
from .gradient import constraint_subgradient_b, constraint_values, stochastic_al_gradient
from .grids import CountsGrid, IntensityGrid, simulate_counts, synthetic_image
from .kl import kl_divergence, kl_divergence_grid, lrt_statistic
from .nadam import nadam_minimize
from .pipeline import METRICS_HEADER, DenoiseConfig, DenoiseResult, denoise
from .sobolev import sobolev_value_grad

__all__ = [
    "BoxSystem",
    "CountsGrid",
    "DenoiseConfig",
    "DenoiseResult",
    "IntensityGrid",
    "METRICS_HEADER",
    "constraint_subgradient_b",
    "constraint_values",
    "denoise",
    "empirical_quantile",
    "estimate_quantile",
    "kl_divergence",
    "kl_divergence_grid",
    "lrt_statistic",
    "nadam_minimize",
    "penalty_pen",
    "rhs_r",
    "sample_max_statistics",
    "simulate_counts",
    "sobolev_value_grad",
    "stochastic_al_gradient",
    "synthetic_image",
]
