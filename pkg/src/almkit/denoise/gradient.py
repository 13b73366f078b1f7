"""Subgradients of the augmented multiscale constraints.

Each box B contributes, to every pixel it covers, the quantity

    b = (1/#B) * max(0, v_B + rho*(eta(Z_B, u_B) - r_B)) * (1 - Z_B/u_B)

when the box mean u_B is positive. A box with zero candidate mean but
positive observed mean gets a fixed negative slope to push the iterate
into the interior of the divergence domain; a box with both means zero
is satisfied and contributes nothing. Per scale, all box means come
from summed-area tables and the scatter of per-box values onto pixels
is another running-sum pass, so one scale costs O(n^2).
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..numkit import SummedAreaTable
from .boxes import BoxSystem
from .kl import kl_divergence, kl_divergence_grid
from .sobolev import sobolev_value_grad

DEFAULT_NEGATIVE_SLOPE = -10.0


def _support_table(u_values: np.ndarray) -> SummedAreaTable:
    """Integer indicator table of positive pixels; box sums are exact."""
    return SummedAreaTable((np.asarray(u_values) > 0.0).astype(np.int64))


def _u_scale_means(
    system: BoxSystem, u_table: SummedAreaTable, support: SummedAreaTable, L: int
) -> np.ndarray:
    """Per-box pixel means of u with exact zeros on zero-support boxes.

    Float prefix sums cannot cancel exactly, so boxes whose pixels are
    all zero are detected through the integer indicator table; this
    keeps the u_B = 0 branch of the subgradient case table exact.
    """
    means = system.scale_means(u_table, L, continuous=False)
    means[support.scale_sums(L) == 0] = 0.0
    return np.maximum(means, 0.0)


def constraint_subgradient_b(
    z_mean: float,
    u_mean: float,
    pixel_count: int,
    rhs: float,
    v: float,
    rho: float,
    neg_slope: float = DEFAULT_NEGATIVE_SLOPE,
) -> float:
    """Per-pixel contribution of a single box, case table as documented."""
    if u_mean > 0.0:
        eta = kl_divergence(z_mean, u_mean)
        active = max(0.0, v + rho * (eta - rhs))
        return active * (1.0 - z_mean / u_mean) / pixel_count
    if z_mean > 0.0:
        return neg_slope
    return 0.0


def _b_values_grid(
    z_means: np.ndarray,
    u_means: np.ndarray,
    pixel_count: int,
    rhs: float,
    v: np.ndarray,
    rho: float,
    neg_slope: float,
) -> np.ndarray:
    out = np.zeros(u_means.shape)
    pos = u_means > 0.0
    if pos.any():
        eta = kl_divergence_grid(z_means[pos], u_means[pos])
        active = np.maximum(0.0, v[pos] + rho * (eta - rhs))
        out[pos] = active * (1.0 - z_means[pos] / u_means[pos]) / pixel_count
    out[(~pos) & (z_means > 0.0)] = neg_slope
    return out


def cover_scatter(b_grid: np.ndarray, n: int, side: int) -> np.ndarray:
    """Accumulate per-position box values onto the pixels each box covers.

    ``b_grid`` holds one value per top-left position of an
    ``side x side`` box; the result at pixel (i, j) is the sum of the
    values of all boxes containing that pixel.
    """
    table = SummedAreaTable(b_grid)
    pps = n - side + 1
    lo = np.clip(np.arange(n) - side + 1, 0, None)
    hi = np.minimum(np.arange(n) + 1, pps)
    return table.rect_sums(lo, hi, lo, hi)


def stochastic_al_gradient(
    image: np.ndarray,
    counts: np.ndarray,
    system: BoxSystem,
    v_by_scale: Mapping[int, np.ndarray],
    rho: float,
    scale_subset: Sequence[int],
    s_exp: float,
    neg_slope: float = DEFAULT_NEGATIVE_SLOPE,
    sobolev_scale: float = 1.0,
) -> np.ndarray:
    """Smoothness gradient plus constraint terms of the selected scales.

    ``image`` is the candidate at counts scale (expected counts per
    pixel), compared against pixel-mean counts. ``sobolev_scale``
    rescales the smoothness term relative to the constraint terms (a
    choice of objective normalization). With the full scale set this is
    the exact subgradient of the augmented Lagrangian; random subsets
    give the stochastic estimate. Scales accumulate in ascending order
    so the result does not depend on how the subset was produced.
    """
    subset = sorted(int(L) for L in scale_subset)
    if not subset:
        raise ValueError("scale subset must be nonempty")
    if any(L not in system.boxes_per_scale for L in subset):
        raise ValueError("scale subset must be drawn from the system's scales")
    rhs = system.require_rhs_counts()
    n = system.n
    _, gradient = sobolev_value_grad(image, s_exp)
    gradient = sobolev_scale * gradient
    u_table = SummedAreaTable(np.asarray(image, dtype=np.float64))
    support = _support_table(image)
    z_table = SummedAreaTable(np.asarray(counts))
    for L in subset:
        u_means = _u_scale_means(system, u_table, support, L)
        z_means = z_table.scale_sums(L) / float(system.pixel_count[L])
        b = _b_values_grid(
            z_means, u_means, system.pixel_count[L], rhs[L], v_by_scale[L], rho, neg_slope
        )
        gradient += cover_scatter(b, n, L)
    return gradient


def constraint_values(image: np.ndarray, counts: np.ndarray, system: BoxSystem) -> np.ndarray:
    """Flat counts-scale constraint values over the whole box family."""
    rhs = system.require_rhs_counts()
    u_table = SummedAreaTable(np.asarray(image, dtype=np.float64))
    support = _support_table(image)
    z_table = SummedAreaTable(np.asarray(counts))
    parts = []
    for L in system.scales:
        u_means = _u_scale_means(system, u_table, support, L)
        z_means = z_table.scale_sums(L) / float(system.pixel_count[L])
        parts.append((kl_divergence_grid(z_means, u_means) - rhs[L]).ravel())
    return np.concatenate(parts)


def brute_force_gradient(
    image: np.ndarray,
    counts: np.ndarray,
    system: BoxSystem,
    v_by_scale: Mapping[int, np.ndarray],
    rho: float,
    scale_subset: Sequence[int],
    s_exp: float,
    neg_slope: float = DEFAULT_NEGATIVE_SLOPE,
    sobolev_scale: float = 1.0,
) -> np.ndarray:
    """Reference gradient via an explicit loop over boxes (test oracle)."""
    rhs = system.require_rhs_counts()
    n = system.n
    _, gradient = sobolev_value_grad(image, s_exp)
    gradient = sobolev_scale * gradient
    counts = np.asarray(counts)
    for L in sorted(int(L) for L in scale_subset):
        pc = system.pixel_count[L]
        for i in range(n - L + 1):
            for j in range(n - L + 1):
                u_mean = float(np.sum(image[i : i + L, j : j + L])) / pc
                z_mean = float(np.sum(counts[i : i + L, j : j + L])) / pc
                b = constraint_subgradient_b(
                    z_mean, u_mean, pc, rhs[L], float(v_by_scale[L][i, j]), rho, neg_slope
                )
                gradient[i : i + L, j : j + L] += b
    return gradient
