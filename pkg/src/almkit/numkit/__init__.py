"""Shared numerical kernels: RNG, summed-area tables, FFT, sparse algebra."""

from .fourier import fft2, ifft2
from .rng import Rng, sample_poisson
from .sat import SummedAreaTable, box_mean
from .sparse import SingularMatrixError, SparseMatrix, sparse_solve

__all__ = [
    "Rng",
    "sample_poisson",
    "SummedAreaTable",
    "box_mean",
    "fft2",
    "ifft2",
    "SparseMatrix",
    "sparse_solve",
    "SingularMatrixError",
]
