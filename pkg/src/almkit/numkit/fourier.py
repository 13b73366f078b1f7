"""2-D discrete Fourier transforms on square power-of-two grids.

Conventions: ``fft2`` is the plain unnormalized forward DFT and
``ifft2`` the unnormalized inverse, so ``ifft2(fft2(x)) == n**2 * x``.
Callers divide by ``n**2`` themselves where a round trip is needed.
"""

from __future__ import annotations

import numpy as np


def _check_grid(grid: np.ndarray) -> int:
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError(f"expected a square grid, got shape {grid.shape}")
    n = grid.shape[0]
    if n < 1 or n & (n - 1):
        raise ValueError(f"grid side must be a power of two, got {n}")
    return n


def fft2(grid: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT of an n x n grid, n a power of two."""
    _check_grid(grid)
    return np.fft.fft2(grid)


def ifft2(grid: np.ndarray) -> np.ndarray:
    """Unnormalized inverse 2-D DFT; composes with fft2 to n**2 times the identity."""
    n = _check_grid(grid)
    return np.fft.ifft2(grid) * float(n * n)
