"""Kullback-Leibler divergence between Poisson means and the local test statistic."""

from __future__ import annotations

import math

import numpy as np


def kl_divergence(a: float, b: float) -> float:
    """Divergence between observed mean ``a`` and candidate mean ``b``.

    Piecewise definition: ``b - a + a*ln(a/b)`` for positive arguments,
    ``b`` when ``a == 0`` and ``b >= 0``, and ``+inf`` otherwise. Total
    on all finite inputs, convex, and zero exactly on the diagonal.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("arguments must be finite")
    if a > 0.0 and b > 0.0:
        return b - a + a * math.log(a / b)
    if a == 0.0 and b >= 0.0:
        return b
    return math.inf


def kl_divergence_grid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise divergence over broadcastable arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a, b = np.broadcast_arrays(a, b)
    out = np.full(a.shape, math.inf)
    pos = (a > 0.0) & (b > 0.0)
    out[pos] = b[pos] - a[pos] + a[pos] * np.log(a[pos] / b[pos])
    zero = (a == 0.0) & (b >= 0.0)
    out[zero] = b[zero]
    return out


def lrt_statistic(z_mean: float, u_mean: float, box_size_cont: float) -> float:
    """Local likelihood-ratio statistic sqrt(2 |B| eta) on a box of size |B|."""
    if box_size_cont <= 0.0:
        raise ValueError("continuous box size must be positive")
    eta = kl_divergence(z_mean, u_mean)
    if math.isinf(eta):
        return math.inf
    return math.sqrt(2.0 * box_size_cont * eta)
