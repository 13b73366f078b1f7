"""Sparse matrices in triplet/CSR form with a direct solver.

Assembly accumulates (row, col, value) triplets; ``finalize`` merges
duplicates into compressed row-major storage. Solves go through a
sparse LU factorization with fill-reducing ordering; every solve
asserts the relative residual bound in debug builds.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

SOLVE_RESIDUAL_BOUND = 1e-10


class SingularMatrixError(ValueError):
    """Raised when LU factorization detects an exactly singular matrix."""


class SparseMatrix:
    """Square or rectangular sparse matrix assembled from triplets.

    Duplicate (row, col) pairs are summed when :meth:`finalize` is
    called; afterwards the entry set is duplicate-free. Setting
    ``symmetric=True`` at finalization asserts exact symmetry of the
    assembled entries.
    """

    def __init__(self, n_rows: int, n_cols: int):
        if n_rows < 1 or n_cols < 1:
            raise ValueError("matrix dimensions must be positive")
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.symmetric = False
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._csr: sp.csr_matrix | None = None

    @classmethod
    def from_triplets(
        cls,
        n_rows: int,
        n_cols: int,
        rows: np.ndarray,
        cols: np.ndarray,
        values: np.ndarray,
        symmetric: bool = False,
    ) -> "SparseMatrix":
        mat = cls(n_rows, n_cols)
        mat.add_batch(rows, cols, values)
        mat.finalize(symmetric=symmetric)
        return mat

    @classmethod
    def wrap(cls, csr: sp.spmatrix, symmetric: bool = False) -> "SparseMatrix":
        """Adopt an existing scipy sparse matrix as finalized storage."""
        csr = sp.csr_matrix(csr)
        mat = cls(csr.shape[0], csr.shape[1])
        mat._csr = csr
        mat.symmetric = symmetric
        return mat

    def add(self, row: int, col: int, value: float) -> None:
        self.add_batch(np.array([row]), np.array([col]), np.array([value]))

    def add_batch(self, rows: np.ndarray, cols: np.ndarray, values: np.ndarray) -> None:
        if self._csr is not None:
            raise RuntimeError("matrix already finalized")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (rows.size == cols.size == values.size):
            raise ValueError("triplet arrays must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= self.n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_cols):
            raise ValueError("column index out of range")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(values)

    def finalize(self, symmetric: bool = False) -> "SparseMatrix":
        if self._csr is None:
            rows = np.concatenate(self._rows) if self._rows else np.empty(0, dtype=np.int64)
            cols = np.concatenate(self._cols) if self._cols else np.empty(0, dtype=np.int64)
            vals = np.concatenate(self._vals) if self._vals else np.empty(0)
            coo = sp.coo_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_cols))
            csr = coo.tocsr()
            csr.sum_duplicates()
            self._csr = csr
            self._rows = self._cols = self._vals = []
        if symmetric:
            if self.n_rows != self.n_cols:
                raise ValueError("symmetric flag requires a square matrix")
            diff = self._csr - self._csr.T
            if diff.nnz and np.max(np.abs(diff.data)) != 0.0:
                raise ValueError("symmetric flag set but entries are not symmetric")
            self.symmetric = True
        return self

    @property
    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            self.finalize()
        return self._csr

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ np.asarray(x, dtype=np.float64)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(x)

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()


def _as_csc(a) -> sp.csc_matrix:
    if isinstance(a, SparseMatrix):
        return a.csr.tocsc()
    return sp.csc_matrix(a)


def sparse_solve(a, b: np.ndarray) -> np.ndarray:
    """Direct solve of ``a @ x = b`` by sparse LU with COLAMD ordering.

    Raises :class:`SingularMatrixError` if the factorization detects
    exact singularity. The relative residual is asserted against
    ``SOLVE_RESIDUAL_BOUND`` in debug builds.
    """
    mat = _as_csc(a)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"solve requires a square matrix, got {mat.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != mat.shape[0]:
        raise ValueError("right-hand side length does not match matrix")
    try:
        lu = spla.splu(mat)
    except RuntimeError as err:
        if "singular" in str(err).lower():
            raise SingularMatrixError(str(err)) from err
        raise
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("factorization produced non-finite solution")
    # one step of iterative refinement if the direct solve falls short
    b_norm = np.linalg.norm(b)
    if b_norm > 0.0:
        residual = b - mat @ x
        if np.linalg.norm(residual) > SOLVE_RESIDUAL_BOUND * b_norm:
            x = x + lu.solve(residual)
        assert (
            np.linalg.norm(b - mat @ x) <= SOLVE_RESIDUAL_BOUND * b_norm
        ), "direct solve violated the residual contract"
    return x
