"""Pixel grids for intensity images and Poisson count data.

The image domain is the unit square split into ``n x n`` pixels of area
``1/n**2``. Intensities are per unit area, so the count observed on a
pixel is Poisson with mean ``pixel_area * intensity``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import Rng


def _check_side(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid side must be a power of two >= 2, got {n}")


@dataclass
class IntensityGrid:
    """Nonnegative intensity values on an n x n pixel grid, n a power of two."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_side(self.n)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.n, self.n):
            raise ValueError(f"values must have shape ({self.n}, {self.n})")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0.0):
            raise ValueError("intensities must be finite and nonnegative")

    @property
    def pixel_area(self) -> float:
        return 1.0 / float(self.n * self.n)


@dataclass
class CountsGrid:
    """Nonnegative integer pixel counts of the observation point process."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        _check_side(self.n)
        self.counts = np.asarray(self.counts)
        if not np.issubdtype(self.counts.dtype, np.integer):
            raise ValueError("counts must be integers")
        self.counts = self.counts.astype(np.int64)
        if self.counts.shape != (self.n, self.n):
            raise ValueError(f"counts must have shape ({self.n}, {self.n})")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def pixel_area(self) -> float:
        return 1.0 / float(self.n * self.n)

    def to_intensity(self) -> IntensityGrid:
        """Counts rescaled by pixel area, the natural starting image."""
        return IntensityGrid(self.n, self.counts / self.pixel_area)


def simulate_counts(truth: IntensityGrid, rng: Rng) -> CountsGrid:
    """Sample pixel counts, independently Poisson with mean area*intensity.

    Because counts on disjoint pixel sets are independent Poisson, the
    count on any pixel-aligned region B is Poisson with mean equal to
    the integral of the intensity over B.
    """
    means = truth.values * truth.pixel_area
    return CountsGrid(truth.n, rng.poissons(means))


def synthetic_image(name: str, n: int, peak: float | None = None) -> IntensityGrid:
    """Built-in test intensities: "flat", "blocks", or "ramp".

    ``peak`` scales the brightest pixel; the default ``20 * n**2`` gives
    about 20 expected counts on the brightest pixels.
    """
    _check_side(n)
    if peak is None:
        peak = 20.0 * n * n
    if peak <= 0.0:
        raise ValueError("peak intensity must be positive")
    if name == "flat":
        values = np.full((n, n), 0.5 * peak)
    elif name == "ramp":
        column = np.linspace(0.1, 1.0, n) * peak
        values = np.tile(column, (n, 1))
    elif name == "blocks":
        values = np.full((n, n), 0.15 * peak)
        q = n // 4
        values[q : 2 * q, q : 3 * q] = peak
        values[2 * q + q // 2 : n - q // 2, q // 2 : q + q // 2] = 0.55 * peak
        values[q // 2 : q, 2 * q : n - q // 2] = 0.8 * peak
        values[5 * n // 8 : 7 * n // 8, n // 2 : 7 * n // 8] = 0.05 * peak
    else:
        raise ValueError(f"unknown synthetic image {name!r}")
    return IntensityGrid(n, values)
