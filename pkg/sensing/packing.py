"""
Lossless real packing of n x n Hermitian matrices into n^2 reals.

Flat index of pixel pair (i, j) is i*n + j (row major):

    diagonal (i == j)  ->  B_ii                (real)
    upper    (i <  j)  ->  Re B_ij
    lower    (i >  j)  ->  Im B_ji             (imaginary part of the mirrored upper entry)

A sensing row packed with pack_row satisfies

    pack_row(A) . pack(B) = Re sum_ij A_ij B_ij

for every Hermitian A and B when the diagonal carries A_ii (exact convention).
The imaginary part of that sum vanishes identically for Hermitian pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from config import HERMITIAN_TOL
from errors import ConsistencyError, DataError, ShapeError


class DiagonalConvention(str, Enum):
    EXACT = "exact"          # diagonal slot carries i_r, consistent with the forward model
    PAPER_SQRT = "paper"     # diagonal slot carries sqrt(i_r)


@dataclass(frozen=True)
class HermitianPacking:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ShapeError(f"packing needs n >= 1, got {self.n}")

    @property
    def size(self) -> int:
        return self.n * self.n

    def flat_index(self, i: int, j: int) -> int:
        return i * self.n + j

    def pair(self, k: int) -> tuple[int, int]:
        return divmod(int(k), self.n)

    def diagonal_slots(self) -> np.ndarray:
        return np.arange(self.n) * (self.n + 1)

    def upper_mask(self) -> np.ndarray:
        return np.triu(np.ones((self.n, self.n), dtype=bool), k=1)

    def pack(self, b: np.ndarray) -> np.ndarray:
        b = self._square(b)
        upper = self.upper_mask()
        out = np.zeros((self.n, self.n))
        out[np.diag_indices(self.n)] = np.real(np.diag(b))
        out[upper] = np.real(b[upper])
        out.T[upper] = np.imag(b[upper])
        return out.ravel()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.size,):
            raise ShapeError(f"packed vector has {x.shape}, expected ({self.size},)")
        grid = x.reshape(self.n, self.n)
        upper = self.upper_mask()
        b = np.zeros((self.n, self.n), dtype=np.complex128)
        b[upper] = grid[upper] + 1j * grid.T[upper]
        b = b + b.conj().T
        b[np.diag_indices(self.n)] = np.diag(grid)
        return b

    def pack_row(self, a: np.ndarray, i_r: np.ndarray,
                 convention: DiagonalConvention = DiagonalConvention.EXACT) -> np.ndarray:
        a = self._square(a)
        deviation = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
        if deviation > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(a)))):
            raise ConsistencyError(f"sensing row is not Hermitian (max deviation {deviation:.3g})")
        diagonal = diagonal_coefficients(i_r, convention)
        if diagonal.shape != (self.n,):
            raise ShapeError(f"i_r has {diagonal.shape} entries, expected {self.n}")

        upper = self.upper_mask()
        row = np.zeros((self.n, self.n))
        row[np.diag_indices(self.n)] = diagonal
        row[upper] = 2.0 * np.real(a[upper])
        row.T[upper] = -2.0 * np.imag(a[upper])
        return row.ravel()

    def _square(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.complex128)
        if m.shape != (self.n, self.n):
            raise ShapeError(f"matrix has shape {m.shape}, expected ({self.n}, {self.n})")
        return m


def diagonal_coefficients(i_r: np.ndarray, convention: DiagonalConvention) -> np.ndarray:
    i_r = np.asarray(i_r, dtype=np.float64)
    if DiagonalConvention(convention) is DiagonalConvention.PAPER_SQRT:
        if np.any(i_r < 0):
            raise DataError("negative reference intensity cannot be square-rooted")
        return np.sqrt(i_r)
    return i_r
