"""Matrices over the ring R = (F^{n x n}, +, Hadamard product).

An element of R^{N x N} is an N x N grid of n x n blocks.  It is stored
slice-major: slice ``(i, j)`` is the N x N matrix collecting entry ``(i, j)``
of every block.  Multiplication over R (``star_multiply``) is then the ordinary
matrix product slice by slice, and likewise for inverses, determinants and
spectra.  Slices that are identically zero are not stored.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotDiagonalizableOverR, NotInvertibleOverR, NumericalError

DEFECTIVE_COND = 1e8


def _pair_keys(pairs: np.ndarray, n: int) -> np.ndarray:
    return pairs[:, 0] * n + pairs[:, 1]


class RingMatrix:
    """Element of R^{N x N} held as a sparse set of N x N slices.

    Parameters
    ----------
    n : int
        Size of the ring elements (each block is n x n).
    N : int
        Size of the block grid.
    pairs : (P, 2) int array
        0-based slice indices ``(i, j)`` that are stored.
    data : (P, N, N) array
        ``data[p]`` is slice ``pairs[p]``.
    upper : bool, optional
        Upper-triangular flag; detected from the data when omitted.
    """

    __slots__ = ("n", "N", "pairs", "data", "upper")

    def __init__(self, n, N, pairs, data, upper=None):
        self.n = int(n)
        self.N = int(N)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        data = np.asarray(data)
        if data.dtype.kind not in "fc":
            data = data.astype(np.float64)
        data = data.reshape(len(pairs), self.N, self.N)
        keys = _pair_keys(pairs, self.n)
        order = np.argsort(keys, kind="stable")
        if len(order) and np.any(np.diff(keys[order]) == 0):
            raise DimensionError("duplicate slice index")
        if len(pairs) and (pairs.min() < 0 or pairs.max() >= self.n):
            raise DimensionError("slice index out of range")
        if not np.all(order == np.arange(len(order))):
            pairs, data = pairs[order], data[order]
        self.pairs = pairs
        self.data = data
        if upper is None:
            upper = not np.any(np.tril(data, -1))
        self.upper = bool(upper)

    # -- construction -------------------------------------------------------------------

    @classmethod
    def zeros(cls, n, N, dtype=np.float64):
        return cls(n, N, np.zeros((0, 2), np.int64), np.zeros((0, N, N), dtype), upper=True)

    @classmethod
    def identity(cls, n, N):
        """The multiplicative identity E: all-ones blocks on the block diagonal."""
        pairs = np.array(list(itertools.product(range(n), repeat=2)), dtype=np.int64).reshape(-1, 2)
        data = np.broadcast_to(np.eye(N), (len(pairs), N, N)).copy()
        return cls(n, N, pairs, data, upper=True)

    @classmethod
    def from_slices(cls, n, N, slices: dict, upper=None):
        keys = sorted(slices)
        data = np.array([np.asarray(slices[k]) for k in keys]) if keys else np.zeros((0, N, N))
        return cls(n, N, np.array(keys, dtype=np.int64).reshape(-1, 2), data, upper)

    @classmethod
    def from_blocks(cls, dense, n, drop_zero=True):
        """Interpret an ``nN x nN`` array as an N x N grid of n x n blocks."""
        dense = np.asarray(dense)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1] or dense.shape[0] % n:
            raise DimensionError(f"cannot split a {dense.shape} array into {n} x {n} blocks")
        N = dense.shape[0] // n
        # cube[r, i, s, j] -> slice[i, j][r, s]
        full = dense.reshape(N, n, N, n).transpose(1, 3, 0, 2).reshape(n * n, N, N)
        pairs = np.array(list(itertools.product(range(n), repeat=2)), dtype=np.int64).reshape(-1, 2)
        if drop_zero:
            keep = np.any(full != 0, axis=(1, 2))
            pairs, full = pairs[keep], full[keep]
        return cls(n, N, pairs, full.copy())

    @classmethod
    def from_ring_element(cls, lam, N):
        """``lam o E`` for ``lam`` in R: ``lam`` on every diagonal block."""
        lam = np.asarray(lam)
        n = lam.shape[0]
        pairs = np.array(list(itertools.product(range(n), repeat=2)), dtype=np.int64).reshape(-1, 2)
        data = lam.reshape(-1)[:, None, None] * np.eye(N)
        return cls(n, N, pairs, data, upper=True)

    # -- views -------------------------------------------------------------------------

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def keys(self):
        return _pair_keys(self.pairs, self.n)

    def slice(self, i, j) -> np.ndarray:
        key = i * self.n + j
        keys = self.keys
        p = np.searchsorted(keys, key)
        if p < len(keys) and keys[p] == key:
            return self.data[p]
        return np.zeros((self.N, self.N), dtype=self.dtype)

    def full_data(self) -> np.ndarray:
        """All n^2 slices as an ``(n, n, N, N)`` array, zeros filled in."""
        out = np.zeros((self.n * self.n, self.N, self.N), dtype=self.dtype)
        out[self.keys] = self.data
        return out.reshape(self.n, self.n, self.N, self.N)

    def block(self, r, s) -> np.ndarray:
        """Ring entry ``(r, s)`` (0-based) as an n x n matrix."""
        out = np.zeros((self.n, self.n), dtype=self.dtype)
        out[self.pairs[:, 0], self.pairs[:, 1]] = self.data[:, r, s]
        return out

    def to_blocks(self) -> np.ndarray:
        """Dense ``nN x nN`` array with block ``(r, s)`` equal to ring entry ``(r, s)``."""
        n, N = self.n, self.N
        return self.full_data().transpose(2, 0, 3, 1).reshape(n * N, n * N)

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def _conform(self, other):
        if not isinstance(other, RingMatrix):
            raise TypeError("expected a RingMatrix")
        if (self.n, self.N) != (other.n, other.N):
            raise DimensionError(f"ring matrices do not conform: {(self.n, self.N)} vs {(other.n, other.N)}")

    def _aligned(self, other):
        """Both operands expanded onto the union of their stored slices."""
        self._conform(other)
        keys = np.union1d(self.keys, other.keys)
        dtype = np.result_type(self.dtype, other.dtype)
        a = np.zeros((len(keys), self.N, self.N), dtype)
        b = np.zeros_like(a)
        a[np.searchsorted(keys, self.keys)] = self.data
        b[np.searchsorted(keys, other.keys)] = other.data
        pairs = np.stack([keys // self.n, keys % self.n], axis=1)
        return pairs, a, b

    def __add__(self, other):
        pairs, a, b = self._aligned(other)
        return RingMatrix(self.n, self.N, pairs, a + b, self.upper and other.upper)

    def __sub__(self, other):
        pairs, a, b = self._aligned(other)
        return RingMatrix(self.n, self.N, pairs, a - b, self.upper and other.upper)

    def __neg__(self):
        return RingMatrix(self.n, self.N, self.pairs, -self.data, self.upper)

    def __mul__(self, scalar):
        if isinstance(scalar, RingMatrix):
            raise TypeError("use star_multiply for products over R")
        return RingMatrix(self.n, self.N, self.pairs, self.data * scalar, self.upper)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return star_multiply(self, other)

    def hadamard_scale(self, lam):
        """``lam o A`` for ``lam`` an element of R (n x n): scales slice (i, j) by ``lam[i, j]``."""
        lam = np.asarray(lam)
        factors = lam[self.pairs[:, 0], self.pairs[:, 1]]
        return RingMatrix(self.n, self.N, self.pairs, self.data * factors[:, None, None], self.upper)

    def pruned(self):
        """Drop stored slices that are identically zero."""
        keep = np.any(self.data != 0, axis=(1, 2))
        return RingMatrix(self.n, self.N, self.pairs[keep], self.data[keep], self.upper)

    def allclose(self, other, rtol=1e-12, atol=1e-14) -> bool:
        _, a, b = self._aligned(other)
        scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.abs(a - b).max(initial=0.0) <= atol + rtol * scale)

    def __eq__(self, other):
        if not isinstance(other, RingMatrix):
            return NotImplemented
        if (self.n, self.N) != (other.n, other.N):
            return False
        _, a, b = self._aligned(other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    def __repr__(self):
        return f"RingMatrix(n={self.n}, N={self.N}, stored_slices={len(self.pairs)}, upper={self.upper})"

    # -- debug dump ---------------------------------------------------------------------

    def to_json(self) -> str:
        slices = {}
        for (i, j), mat in zip(self.pairs, self.data):
            if not np.any(mat):
                continue
            if np.iscomplexobj(mat):
                slices[f"{i},{j}"] = [[[z.real, z.imag] for z in row] for row in mat.tolist()]
            else:
                slices[f"{i},{j}"] = mat.tolist()
        return json.dumps({"n": self.n, "N": self.N, "slices": slices}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        n, N = obj["n"], obj["N"]
        slices = {}
        for key, rows in obj["slices"].items():
            i, j = (int(x) for x in key.split(","))
            arr = np.asarray(rows)
            if arr.ndim == 3:
                arr = arr[..., 0] + 1j * arr[..., 1]
            slices[(i, j)] = arr
        return cls.from_slices(n, N, slices)


# -- arithmetic over R -----------------------------------------------------------------


def star_multiply(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    """Product over R: ``(A * B)[r, s] = sum_k A[r, k] o B[k, s]``, computed slice-wise."""
    A._conform(B)
    common, ia, ib = np.intersect1d(A.keys, B.keys, assume_unique=True, return_indices=True)
    data = np.matmul(A.data[ia], B.data[ib])
    pairs = np.stack([common // A.n, common % A.n], axis=1)
    return RingMatrix(A.n, A.N, pairs, data, A.upper and B.upper)


def star_power(A: RingMatrix, k: int) -> RingMatrix:
    if k < 0:
        return star_power(star_inverse(A), -k)
    out = RingMatrix.identity(A.n, A.N)
    for _ in range(k):
        out = star_multiply(out, A)
    return out


def star_transpose(A: RingMatrix) -> RingMatrix:
    """Transpose every block in place; block positions are unchanged."""
    return RingMatrix(A.n, A.N, A.pairs[:, ::-1].copy(), A.data, A.upper)


def dd_star(A: RingMatrix) -> RingMatrix:
    """Replace each block by the diagonal matrix of its diagonal."""
    keep = A.pairs[:, 0] == A.pairs[:, 1]
    return RingMatrix(A.n, A.N, A.pairs[keep], A.data[keep], A.upper)


def _upper_inverse(T: np.ndarray) -> np.ndarray:
    """Inverse of a batch of upper-triangular matrices by back substitution."""
    P, N, _ = T.shape
    X = np.zeros_like(T)
    eye = np.eye(N, dtype=T.dtype)
    for r in range(N - 1, -1, -1):
        rhs = eye[r] - np.einsum("pk,pkc->pc", T[:, r, r + 1:], X[:, r + 1:, :])
        X[:, r, :] = rhs / T[:, r, r, None]
    return X


def star_inverse(A: RingMatrix) -> RingMatrix:
    """Inverse over R; exists iff every one of the n^2 slices is nonsingular."""
    n, N = A.n, A.N
    if len(A.pairs) < n * n:
        have = set(map(int, A.keys))
        missing = next(k for k in range(n * n) if k not in have)
        raise NotInvertibleOverR((missing // n, missing % n))
    if A.upper:
        diag = np.diagonal(A.data, axis1=1, axis2=2)
        bad = np.flatnonzero(np.any(diag == 0, axis=1))
        if len(bad):
            raise NotInvertibleOverR(tuple(A.pairs[bad[0]]))
        return RingMatrix(n, N, A.pairs, _upper_inverse(A.data), upper=True)
    sv = np.linalg.svd(A.data, compute_uv=False)
    bad = np.flatnonzero(sv[:, -1] <= np.finfo(float).eps * N * sv[:, 0])
    if len(bad):
        raise NotInvertibleOverR(tuple(A.pairs[bad[0]]))
    return RingMatrix(n, N, A.pairs, np.linalg.inv(A.data))


def ring_det(A: RingMatrix) -> np.ndarray:
    """Determinant over R: entry ``(i, j)`` is the ordinary determinant of slice ``(i, j)``."""
    out = np.zeros((A.n, A.n), dtype=A.dtype)
    if len(A.pairs):
        out[A.pairs[:, 0], A.pairs[:, 1]] = np.linalg.det(A.data)
    return out


def slice_spectral_radii(M: RingMatrix) -> np.ndarray:
    """Ordinary spectral radius of every stored slice."""
    if not len(M.pairs):
        return np.zeros(0)
    if M.upper:
        return np.abs(np.diagonal(M.data, axis1=1, axis2=2)).max(axis=1)
    try:
        ev = np.linalg.eigvals(M.data)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    return np.abs(ev).max(axis=1)


def ring_spectral_radius(M: RingMatrix) -> float:
    """Generalized spectral radius: the largest ordinary spectral radius over all slices."""
    radii = slice_spectral_radii(M)
    return float(radii.max()) if len(radii) else 0.0


def series_radius(M: RingMatrix, coeff_radius: float) -> float:
    """Radius of convergence in z of ``sum c_k z^k M^{*k}`` given the radius of ``sum c_k z^k``."""
    if not coeff_radius > 0:
        raise ValueError("coefficient radius must be positive")
    rho = ring_spectral_radius(M)
    return float("inf") if rho == 0 else coeff_radius / rho


@dataclass(frozen=True)
class RingEigenDecomposition:
    V: RingMatrix
    Lam: RingMatrix
    cond: np.ndarray  # (n, n) eigenvector-matrix condition numbers

    def eigenvalues(self):
        """The N assembled eigenvalues in R: ``Lam[k, k]`` for k = 0..N-1."""
        return [self.Lam.block(k, k) for k in range(self.Lam.N)]


def ring_eigendecompose(M: RingMatrix, max_cond: float = DEFECTIVE_COND) -> RingEigenDecomposition:
    """Diagonalize over R slice by slice: ``M * V = V * Lam`` with ``Lam`` diagonal over R."""
    n, N = M.n, M.N
    full = M.full_data().reshape(n * n, N, N)
    try:
        w, vecs = np.linalg.eig(full)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    cond = np.linalg.cond(vecs)
    bad = np.flatnonzero(~(cond <= max_cond))
    if len(bad):
        k = int(bad[0])
        raise NotDiagonalizableOverR((k // n, k % n), cond[k])
    pairs = np.array(list(itertools.product(range(n), repeat=2)), dtype=np.int64).reshape(-1, 2)
    lam = w[:, :, None] * np.eye(N)
    if not np.iscomplexobj(full) and not np.iscomplexobj(w):
        vecs, lam = vecs.real, lam.real
    V = RingMatrix(n, N, pairs, vecs)
    Lam = RingMatrix(n, N, pairs, lam, upper=True)
    return RingEigenDecomposition(V, Lam, cond.reshape(n, n))


def ring_eigenvalues(M: RingMatrix, limit: int = 10**6):
    """Iterate over all N^(n^2) eigenvalues of M in R, with multiplicity.

    Each eigenvalue picks one ordinary eigenvalue from every slice.
    """
    n, N = M.n, M.N
    if N ** (n * n) > limit:
        raise ValueError(f"{N}^{n * n} eigenvalues exceeds the enumeration limit {limit}")
    spectra = np.linalg.eigvals(M.full_data().reshape(n * n, N, N))
    for choice in itertools.product(range(N), repeat=n * n):
        yield spectra[np.arange(n * n), list(choice)].reshape(n, n)
