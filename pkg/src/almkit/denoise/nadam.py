"""Nesterov-accelerated adaptive-moment descent with nonnegativity clamping."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..numkit import Rng

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


def nadam_minimize(
    u0: np.ndarray,
    gradient: Callable[[np.ndarray, Rng], np.ndarray],
    iterations: int,
    stepsize: float,
    rng: Rng,
) -> np.ndarray:
    """Run a fixed number of adaptive-moment steps from ``u0``.

    ``gradient(u, rng)`` may be stochastic; the generator is handed
    through so randomized estimators stay reproducible. Moment
    estimates use decay 0.9/0.999 with bias correction, the first
    moment with the look-ahead correction; after every step negative
    entries are clamped to zero.
    """
    if iterations < 1:
        raise ValueError("iteration budget must be at least 1")
    if stepsize <= 0.0:
        raise ValueError("stepsize must be positive")
    u = np.array(u0, dtype=np.float64, copy=True)
    m = np.zeros_like(u)
    n = np.zeros_like(u)
    for t in range(1, iterations + 1):
        g = np.asarray(gradient(u, rng), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            bad = int(np.count_nonzero(~np.isfinite(g)))
            raise FloatingPointError(
                f"non-finite gradient ({bad} entries) at inner iteration {t}"
            )
        m = BETA1 * m + (1.0 - BETA1) * g
        n = BETA2 * n + (1.0 - BETA2) * g * g
        m_hat = m / (1.0 - BETA1 ** (t + 1))
        g_hat = g / (1.0 - BETA1**t)
        n_hat = n / (1.0 - BETA2**t)
        u -= stepsize * (BETA1 * m_hat + (1.0 - BETA1) * g_hat) / (np.sqrt(n_hat) + EPS)
        np.maximum(u, 0.0, out=u)
    return u
