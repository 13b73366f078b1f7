"""P1 finite elements on a uniform right-triangle mesh of the unit square.

Each of the M x M cells is split along its bottom-left to top-right
diagonal into two triangles (2 M^2 in total). Homogeneous Dirichlet
conditions are imposed by restricting to the (M-1)^2 interior nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..numkit import SparseMatrix


def _node_grid(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the full (m+1)^2 node grid, index = iy*(m+1)+ix."""
    coords = np.linspace(0.0, 1.0, m + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    return xx.ravel(), yy.ravel()


def _triangles(m: int) -> np.ndarray:
    """Vertex index triples of all 2 m^2 triangles."""
    stride = m + 1
    cx, cy = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
    v00 = (cy * stride + cx).ravel()
    v10 = v00 + 1
    v01 = v00 + stride
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    return np.concatenate([lower, upper], axis=0)


def assemble_full(m: int) -> tuple[sp.csr_matrix, sp.csr_matrix, np.ndarray]:
    """Stiffness, consistent mass, and lumped-mass diagonal over all nodes.

    No boundary conditions are applied; the lumped diagonal sums to the
    domain area 1.
    """
    if m < 2:
        raise ValueError("mesh must have at least 2 cells per side")
    x, y = _node_grid(m)
    tris = _triangles(m)
    n_nodes = (m + 1) ** 2

    px = x[tris]  # (n_tri, 3)
    py = y[tris]
    # edge vectors opposite each vertex give the P1 gradient coefficients
    bx = np.stack([py[:, 1] - py[:, 2], py[:, 2] - py[:, 0], py[:, 0] - py[:, 1]], axis=1)
    by = np.stack([px[:, 2] - px[:, 1], px[:, 0] - px[:, 2], px[:, 1] - px[:, 0]], axis=1)
    det = (px[:, 1] - px[:, 0]) * (py[:, 2] - py[:, 0]) - (px[:, 2] - px[:, 0]) * (
        py[:, 1] - py[:, 0]
    )
    area = 0.5 * np.abs(det)

    # local 3x3 blocks for every triangle at once
    k_local = (bx[:, :, None] * bx[:, None, :] + by[:, :, None] * by[:, None, :]) / (
        4.0 * area[:, None, None]
    )
    m_pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m_local = area[:, None, None] * m_pattern[None, :, :]

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    stiffness = sp.coo_matrix(
        (k_local.ravel(), (rows, cols)), shape=(n_nodes, n_nodes)
    ).tocsr()
    mass = sp.coo_matrix((m_local.ravel(), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    lumped = np.zeros(n_nodes)
    np.add.at(lumped, tris.ravel(), np.repeat(area / 3.0, 3))
    return stiffness, mass, lumped


@dataclass
class FemSystem:
    """Interior-node matrices of the Dirichlet problem plus mesh metadata."""

    m: int
    h: float
    n_interior: int
    stiffness: SparseMatrix
    mass: SparseMatrix
    lumped: np.ndarray
    y_d_h: np.ndarray
    interior_x: np.ndarray
    interior_y: np.ndarray
    interior_full_index: np.ndarray

    def interior_to_full(self, values: np.ndarray) -> np.ndarray:
        """Pad interior nodal values with the zero boundary."""
        full = np.zeros((self.m + 1) ** 2)
        full[self.interior_full_index] = values
        return full

    def interior_image(self, values: np.ndarray) -> np.ndarray:
        """Interior nodal values as an (m-1) x (m-1) grid, row-major in y."""
        return np.asarray(values).reshape(self.m - 1, self.m - 1)


def interior_indices(m: int) -> np.ndarray:
    stride = m + 1
    ix, iy = np.meshgrid(np.arange(1, m), np.arange(1, m), indexing="xy")
    return (iy * stride + ix).ravel()


def assemble_fem(m: int, y_d: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> FemSystem:
    """Assemble the Dirichlet system and interpolate the desired state."""
    stiffness_full, mass_full, lumped_full = assemble_full(m)
    idx = interior_indices(m)
    x, y = _node_grid(m)
    sub = np.ix_(idx, idx)
    fem = FemSystem(
        m=m,
        h=1.0 / m,
        n_interior=idx.size,
        stiffness=SparseMatrix.wrap(stiffness_full[sub], symmetric=True),
        mass=SparseMatrix.wrap(mass_full[sub], symmetric=True),
        lumped=lumped_full[idx],
        y_d_h=np.asarray(y_d(x[idx], y[idx]), dtype=np.float64),
        interior_x=x[idx],
        interior_y=y[idx],
        interior_full_index=idx,
    )
    if np.any(fem.lumped <= 0.0):
        raise AssertionError("lumped mass diagonal must be strictly positive")
    return fem


def p1_interpolate(m: int, full_values: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Evaluate a P1 function (full-grid nodal values) at arbitrary points."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    h = 1.0 / m
    cx = np.clip(np.floor(px / h).astype(int), 0, m - 1)
    cy = np.clip(np.floor(py / h).astype(int), 0, m - 1)
    xi = px / h - cx
    ups = py / h - cy
    stride = m + 1
    a00 = full_values[cy * stride + cx]
    a10 = full_values[cy * stride + cx + 1]
    a01 = full_values[(cy + 1) * stride + cx]
    a11 = full_values[(cy + 1) * stride + cx + 1]
    lower = a00 + (a10 - a00) * xi + (a11 - a10) * ups
    upper = a00 + (a11 - a01) * xi + (a01 - a00) * ups
    return np.where(xi >= ups, lower, upper)
