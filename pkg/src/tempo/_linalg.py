"""Factorized n x n solves used by the block back substitutions."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalError

# blocks at most this size, or denser than DENSE_FRACTION, are factorized densely
DENSE_SIZE = 400
DENSE_FRACTION = 0.05


class BlockFactor:
    """LU factorization of one diagonal block; ``frame`` is reported on failure (1-based)."""

    def __init__(self, matrix, frame=None):
        self.frame = frame
        n = matrix.shape[0]
        nnz = matrix.nnz if sp.issparse(matrix) else np.count_nonzero(matrix)
        self.dense = n <= DENSE_SIZE or nnz > DENSE_FRACTION * n * n
        if self.dense:
            mat = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=np.float64)
            if not np.all(np.isfinite(mat)):
                raise NumericalError("non-finite entries in diagonal block", frame)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu, piv = sla.lu_factor(mat, check_finite=False)
            d = np.abs(np.diagonal(lu))
            if d.min(initial=np.inf) <= n * np.finfo(float).eps * max(d.max(initial=0.0), 1.0):
                raise NumericalError(f"diagonal block of frame {frame} is singular", frame)
            self._lu = (lu, piv)
        else:
            try:
                self._lu = spla.splu(sp.csc_matrix(matrix))
            except RuntimeError as exc:
                raise NumericalError(f"diagonal block of frame {frame} is singular: {exc}", frame) from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.dense:
            x = sla.lu_solve(self._lu, b, check_finite=False)
        else:
            x = self._lu.solve(np.asarray(b, dtype=np.float64))
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"solve against diagonal block of frame {self.frame} overflowed", self.frame)
        return x
