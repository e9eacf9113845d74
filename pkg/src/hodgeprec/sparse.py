"""Column-compressed storage and a minimal linear-operator wrapper.

Storage and products are delegated to ``scipy.sparse``; the triangular
kernels that need per-column access live in :mod:`hodgeprec._kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np
import scipy.sparse as sp

from .errors import DenseCapExceeded, DimensionMismatch

#: Largest dimension for which operators may be materialized densely.
DEFAULT_DENSE_CAP = 4096


def check_dense_cap(shape: tuple[int, ...], cap: Optional[int]) -> None:
    cap = DEFAULT_DENSE_CAP if cap is None else cap
    if max(shape, default=0) > cap:
        raise DenseCapExceeded(f"dimension {max(shape)} exceeds dense cap {cap}")


class SparseColumnMatrix:
    """Immutable CSC matrix: sorted row indices per column, no stored zeros."""

    __slots__ = ("_csc",)

    def __init__(self, matrix):
        csc = sp.csc_matrix(matrix, dtype=np.float64, copy=True)
        csc.eliminate_zeros()
        csc.sum_duplicates()
        csc.sort_indices()
        csc.indptr = csc.indptr.astype(np.int64)
        csc.indices = csc.indices.astype(np.int64)
        for a in (csc.data, csc.indices, csc.indptr):
            a.flags.writeable = False
        self._csc = csc

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape) -> "SparseColumnMatrix":
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @property
    def shape(self) -> tuple[int, int]:
        return self._csc.shape

    @property
    def n_rows(self) -> int:
        return self._csc.shape[0]

    @property
    def n_cols(self) -> int:
        return self._csc.shape[1]

    @property
    def nnz(self) -> int:
        return int(self._csc.nnz)

    @property
    def indptr(self) -> np.ndarray:
        return self._csc.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csc.indices

    @property
    def data(self) -> np.ndarray:
        return self._csc.data

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self._csc.indptr[j], self._csc.indptr[j + 1]
        return self._csc.indices[lo:hi], self._csc.data[lo:hi]

    def columns(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for j in range(self.n_cols):
            yield self.column(j)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self._csc.tocoo()
        order = np.lexsort((coo.row, coo.col))
        return coo.row[order], coo.col[order], coo.data[order]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n_cols:
            raise DimensionMismatch(f"expected length {self.n_cols}, got {x.shape[0]}")
        return self._csc @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.n_rows:
            raise DimensionMismatch(f"expected length {self.n_rows}, got {y.shape[0]}")
        return self._csc.T @ y

    def to_scipy(self) -> sp.csc_matrix:
        return self._csc.copy()

    def to_dense(self, cap: Optional[int] = None) -> np.ndarray:
        check_dense_cap(self.shape, cap)
        return self._csc.toarray()

    def __repr__(self) -> str:
        return f"SparseColumnMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True)
class LinearOperator:
    """``y = A x`` with an optional adjoint and dense materialization."""

    shape: tuple[int, int]
    _matvec: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _rmatvec: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    _dense: Optional[Callable[[], np.ndarray]] = field(default=None, repr=False)
    symmetric: bool = False

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise DimensionMismatch(f"expected shape ({self.shape[1]},), got {x.shape}")
        return self._matvec(x)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        if self._rmatvec is None:
            if not self.symmetric:
                raise NotImplementedError("operator has no adjoint")
            return self.matvec(y)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.shape[0],):
            raise DimensionMismatch(f"expected shape ({self.shape[0]},), got {y.shape}")
        return self._rmatvec(y)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(x)

    def to_dense(self, cap: Optional[int] = None) -> np.ndarray:
        check_dense_cap(self.shape, cap)
        if self._dense is not None:
            return np.array(self._dense(), dtype=np.float64)
        out = np.empty(self.shape)
        e = np.zeros(self.shape[1])
        for j in range(self.shape[1]):
            e[j] = 1.0
            out[:, j] = self._matvec(e)
            e[j] = 0.0
        return out

    @classmethod
    def from_matrix(cls, m, symmetric: bool = False) -> "LinearOperator":
        if sp.issparse(m):
            m = sp.csr_matrix(m)
            mt = m.T.tocsr()
            return cls(m.shape, m.dot, mt.dot, m.toarray, symmetric)
        m = np.asarray(m, dtype=np.float64)
        return cls(m.shape, m.dot, m.T.dot, lambda: m, symmetric)

    @classmethod
    def identity(cls, n: int) -> "LinearOperator":
        return cls((n, n), lambda x: x.copy(), None, lambda: np.eye(n), True)
