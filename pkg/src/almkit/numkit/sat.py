"""Summed-area tables for constant-time box sums over a 2-D grid.

Integer grids are accumulated in int64 so box sums over counts are
exact; float grids use float64 prefix sums.
"""

from __future__ import annotations

import numpy as np


class SummedAreaTable:
    """Row/column prefix sums with a zero guard row and column.

    ``cumulative[i, j]`` holds the sum of ``grid[:i, :j]``, so the sum
    over rows ``r0:r1`` and columns ``c0:c1`` (half-open) is the usual
    four-corner combination.
    """

    def __init__(self, grid: np.ndarray):
        grid = np.asarray(grid)
        if grid.ndim != 2:
            raise ValueError("summed-area table requires a 2-D grid")
        dtype = np.int64 if np.issubdtype(grid.dtype, np.integer) else np.float64
        n_rows, n_cols = grid.shape
        cum = np.zeros((n_rows + 1, n_cols + 1), dtype=dtype)
        np.cumsum(np.cumsum(grid, axis=0, dtype=dtype), axis=1, out=cum[1:, 1:])
        self.cumulative = cum
        self.shape = grid.shape

    def box_sum(self, row: int, col: int, side: int) -> float:
        """Sum over the ``side x side`` box with top-left corner (row, col)."""
        n_rows, n_cols = self.shape
        if side < 1 or row < 0 or col < 0 or row + side > n_rows or col + side > n_cols:
            raise ValueError(
                f"box (row={row}, col={col}, side={side}) outside {n_rows}x{n_cols} grid"
            )
        c = self.cumulative
        return c[row + side, col + side] - c[row, col + side] - c[row + side, col] + c[row, col]

    def rect_sums(
        self,
        row_lo: np.ndarray,
        row_hi: np.ndarray,
        col_lo: np.ndarray,
        col_hi: np.ndarray,
    ) -> np.ndarray:
        """Sums over the outer product of half-open row and column ranges.

        ``row_lo/row_hi`` and ``col_lo/col_hi`` are 1-D index arrays; the
        result has shape ``(len(row_lo), len(col_lo))`` with entry (a, b)
        equal to the sum of ``grid[row_lo[a]:row_hi[a], col_lo[b]:col_hi[b]]``.
        """
        c = self.cumulative
        return (
            c[np.ix_(row_hi, col_hi)]
            - c[np.ix_(row_lo, col_hi)]
            - c[np.ix_(row_hi, col_lo)]
            + c[np.ix_(row_lo, col_lo)]
        )

    def scale_sums(self, side: int) -> np.ndarray:
        """All box sums at one scale: entry (i, j) covers rows i:i+side, cols j:j+side."""
        n_rows, n_cols = self.shape
        if not 1 <= side <= min(n_rows, n_cols):
            raise ValueError(f"scale {side} outside grid {self.shape}")
        lo_r = np.arange(n_rows - side + 1)
        lo_c = np.arange(n_cols - side + 1)
        return self.rect_sums(lo_r, lo_r + side, lo_c, lo_c + side)


def box_mean(table: SummedAreaTable, row: int, col: int, side: int) -> float:
    """Arithmetic mean of the entries covered by the given box."""
    return table.box_sum(row, col, side) / float(side * side)
