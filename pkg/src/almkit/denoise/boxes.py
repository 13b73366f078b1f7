"""Multiscale system of sub-square constraints and its calibration.

Every sub-square B of the image with side length in a configured scale
range contributes one inequality constraint ``eta(Z_B, u_B) <= r(|B|)``.
Size conventions, fixed once for the whole artifact: the continuous
size is ``|B| = pixel_area * pixel_count``; the scale penalty applies
the formula ``sqrt(2*(ln(n^2/size) + 1))`` to the PIXEL COUNT of the
box (the count ratio ``n^2 / #B`` is what balances the scales
statistically; feeding the continuous size over-damps everything and
pushes the calibrated quantile negative); the max statistic normalizes
per-box sums of standard normals by ``sqrt(pixel_count)`` so each box
statistic is standard normal. The calibrated quantile is only
meaningful together with these conventions.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..numkit import Rng, SummedAreaTable


def penalty_pen(box_size_cont: float, n: int) -> float:
    """Scale penalty sqrt(2*(ln(n^2/|B|)+1)), strictly decreasing in |B|."""
    if box_size_cont <= 0.0:
        raise ValueError("continuous box size must be positive")
    return math.sqrt(2.0 * (math.log(n * n / box_size_cont) + 1.0))


def rhs_r(box_size_cont: float, pen: float, q_tilde: float, r_shift: float = 0.0) -> float:
    """Constraint right-hand side (q + pen)^2 / (2|B|) plus an optional shift.

    Negative shifts tighten every constraint by the same amount, the
    "decreased r" variant used to counteract oversmoothing.
    """
    if box_size_cont <= 0.0:
        raise ValueError("continuous box size must be positive")
    if q_tilde + pen <= 0.0:
        raise ValueError("q_tilde + pen must be positive")
    return (q_tilde + pen) ** 2 / (2.0 * box_size_cont) + r_shift


class BoxSystem:
    """All sub-squares of an n x n grid with sides in ``scales``.

    Scales default to ``1 .. min(64, n // 4)``. Per-box quantities
    depend on the scale only; per-scale arrays are laid out row-major
    over the ``(n - L + 1)**2`` top-left positions, and flattened
    vectors over the whole family concatenate scales in ascending
    order.
    """

    def __init__(
        self,
        n: int,
        q_tilde: float | None = None,
        scales: Sequence[int] | None = None,
        r_shift: float = 0.0,
        pen_override: Mapping[int, float] | None = None,
    ):
        if n < 2:
            raise ValueError("grid side must be at least 2")
        self.n = n
        self.pixel_area = 1.0 / float(n * n)
        if scales is None:
            scales = range(1, min(64, n // 4) + 1)
        self.scales = [int(s) for s in scales]
        if not self.scales or sorted(set(self.scales)) != self.scales:
            raise ValueError("scales must be strictly increasing and nonempty")
        if self.scales[0] < 1 or self.scales[-1] > n:
            raise ValueError("scales must lie between 1 and the grid side")
        self.q_tilde = q_tilde
        self.r_shift = float(r_shift)

        self.pixel_count = {L: L * L for L in self.scales}
        self.size_cont = {L: self.pixel_area * L * L for L in self.scales}
        self.pen = {
            L: (
                float(pen_override[L])
                if pen_override is not None and L in pen_override
                else penalty_pen(float(self.pixel_count[L]), n)
            )
            for L in self.scales
        }
        self.positions_per_side = {L: n - L + 1 for L in self.scales}
        self.boxes_per_scale = {L: (n - L + 1) ** 2 for L in self.scales}
        self._offsets: dict[int, int] = {}
        offset = 0
        for L in self.scales:
            self._offsets[L] = offset
            offset += self.boxes_per_scale[L]
        self.total_boxes = offset

        # Right-hand sides in two equivalent unit systems. The divergence
        # is positively 1-homogeneous, so the same constraint family can
        # be expressed with box means per unit area against ``rhs`` or
        # with pixel-mean counts against ``rhs_counts`` (their ratio is
        # the pixel area). The solver pipeline works at counts scale,
        # where the documented tolerances and multiplier boxes live;
        # ``r_shift`` therefore applies at counts scale.
        self.rhs: dict[int, float] | None = None
        self.rhs_counts: dict[int, float] | None = None
        if q_tilde is not None:
            self.rhs_counts = {
                L: (q_tilde + self.pen[L]) ** 2 / (2.0 * self.pixel_count[L]) + r_shift
                for L in self.scales
            }
            self.rhs = {L: self.rhs_counts[L] / self.pixel_area for L in self.scales}
            worst = min(self.rhs_counts.values())
            if worst <= 0.0:
                raise ValueError(
                    f"right-hand side must stay positive after shift, got minimum {worst}"
                )

    def require_rhs_counts(self) -> dict[int, float]:
        if self.rhs_counts is None:
            raise ValueError("box system has no calibrated quantile; construct with q_tilde")
        return self.rhs_counts

    def rhs_counts_vector(self) -> np.ndarray:
        """Per-box counts-scale right-hand sides in flat layout."""
        rhs = self.require_rhs_counts()
        return np.concatenate(
            [np.full(self.boxes_per_scale[L], rhs[L]) for L in self.scales]
        )

    def split_flat(self, flat: np.ndarray) -> dict[int, np.ndarray]:
        """View a flat per-box vector as per-scale position grids."""
        flat = np.asarray(flat)
        if flat.shape != (self.total_boxes,):
            raise ValueError(f"expected flat vector of length {self.total_boxes}")
        out = {}
        for L in self.scales:
            pps = self.positions_per_side[L]
            start = self._offsets[L]
            out[L] = flat[start : start + pps * pps].reshape(pps, pps)
        return out

    def flatten(self, per_scale: Mapping[int, np.ndarray]) -> np.ndarray:
        """Concatenate per-scale position grids into the flat layout."""
        return np.concatenate([np.asarray(per_scale[L]).ravel() for L in self.scales])

    def scale_means(self, table: SummedAreaTable, L: int, continuous: bool) -> np.ndarray:
        """Box means at one scale: discrete (per pixel) or continuous (per area)."""
        sums = table.scale_sums(L)
        denom = self.size_cont[L] if continuous else float(self.pixel_count[L])
        return sums / denom


def sample_max_statistics(system: BoxSystem, mc_samples: int, rng: Rng) -> np.ndarray:
    """Monte-Carlo replications of the penalized multiscale max statistic.

    Each replication draws a fresh grid of i.i.d. standard normals from
    a child generator keyed by the replication index and evaluates
    ``max over boxes of |box sum| / sqrt(pixel_count) - pen``.
    """
    if mc_samples < 100:
        raise ValueError("at least 100 Monte-Carlo samples required")
    values = np.empty(mc_samples)
    for rep in range(mc_samples):
        child = rng.spawn(rep)
        table = SummedAreaTable(child.normal_grid(system.n))
        best = -math.inf
        for L in system.scales:
            sums = table.scale_sums(L)
            stat = np.max(np.abs(sums)) / float(L) - system.pen[L]
            best = max(best, stat)
        values[rep] = best
    return values


def empirical_quantile(samples: np.ndarray, alpha: float) -> float:
    """Order statistic at index ceil((1-alpha) * len(samples)), 1-based."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    ordered = np.sort(np.asarray(samples, dtype=np.float64))
    index = math.ceil((1.0 - alpha) * ordered.size)
    return float(ordered[index - 1])


def estimate_quantile(system: BoxSystem, alpha: float, mc_samples: int, rng: Rng) -> float:
    """Calibrate the constraint quantile by Monte-Carlo sampling."""
    return empirical_quantile(sample_max_statistics(system, mc_samples, rng), alpha)
