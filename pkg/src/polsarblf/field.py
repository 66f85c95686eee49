"""Raster of per-pixel covariance (or coherency) matrices."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

PAULI = "pauli"
LEXICOGRAPHIC = "lexicographic"
BASES = (PAULI, LEXICOGRAPHIC)


@dataclass
class CovarianceField:
    """``data`` has shape (height, width, d, d), complex128, row-major pixels."""

    data: np.ndarray
    looks: int = 1
    basis: str = PAULI
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 4 or self.data.shape[-1] != self.data.shape[-2]:
            raise ValueError(f"covariance field must be (H, W, d, d), got {self.data.shape}")
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[-1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def channel(self, i: int = 0, j: int = 0) -> np.ndarray:
        """One matrix element as a plane; real for diagonal entries."""
        plane = self.data[:, :, i, j]
        return plane.real.copy() if i == j else plane.copy()

    def with_data(self, data: np.ndarray) -> "CovarianceField":
        return replace(self, data=data, meta=dict(self.meta))

    def copy(self) -> "CovarianceField":
        return self.with_data(self.data.copy())

    def transpose(self) -> "CovarianceField":
        return self.with_data(np.ascontiguousarray(self.data.transpose(1, 0, 2, 3)))

    @classmethod
    def constant(cls, matrix, height: int, width: int, **kw) -> "CovarianceField":
        m = np.asarray(matrix, dtype=np.complex128)
        return cls(np.broadcast_to(m, (height, width) + m.shape).copy(), **kw)


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle ``[row0, row1) x [col0, col1)``."""

    row0: int
    col0: int
    row1: int
    col1: int

    def __post_init__(self):
        if self.row1 <= self.row0 or self.col1 <= self.col0:
            raise ValueError(f"empty rectangle {self}")

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.row0, self.row1), slice(self.col0, self.col1)

    @property
    def size(self) -> int:
        return (self.row1 - self.row0) * (self.col1 - self.col0)

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.slices] = True
        return m
