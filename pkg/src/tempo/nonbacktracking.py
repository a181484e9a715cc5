"""Nonbacktracking Katz centrality of temporal networks.

The generating function of nonbacktracking walk counts is

    Psi(A, t) = [I - Z + dd*(t A Z)]^{-1},   Z = t A * (E - t^2 A^{*T} * A)^{*-1},

where ``*`` is multiplication over the Hadamard ring and ``t A Z`` is an
ordinary block product.  Every slice of ``Z`` is an N x N upper-triangular
matrix, one per ordered node pair with an edge in some frame, so ``Z`` is built
with batched triangular solves.  Only the block diagonals of ``t A Z`` are
needed, and the final system is solved by block back substitution.

Shapes used throughout: ``P`` active node pairs, ``a`` is ``(P, N)`` with
``a[p, s]`` the weight of pair p in frame s, ``Z`` is ``(P, N, N)``, and the
diagonal correction ``Dg`` is ``(n, N, N)`` with ``Dg[i, r, s]`` the ``(i, i)``
entry of block ``(r, s)``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._linalg import BlockFactor
from .centrality import CentralityReport, temporal_spectral_radius
from .errors import ParameterError, ValidationError
from .ring import RingMatrix
from .temporal_graph import TemporalNetwork, assemble_time_evolving

CHUNK = 1 << 14


def compute_t0(net_or_frames) -> float:
    """``(max_{i,j,s} A[s]_ij A[s]_ji)^(-1/2)``; infinite when no frame has a reciprocal pair or loop."""
    frames = assemble_time_evolving(net_or_frames).frames if isinstance(net_or_frames, TemporalNetwork) else net_or_frames
    best = 0.0
    for A in frames:
        A = sp.csr_matrix(A)
        prod = A.multiply(A.T)
        if prod.nnz:
            best = max(best, float(prod.max()))
    return math.inf if best == 0 else best**-0.5


def auto_t(net: TemporalNetwork) -> float:
    """``0.5 * min(1/rho, t0)``: inside the admissible interval of every method."""
    rho = temporal_spectral_radius(net)
    bound = min(1.0 / rho if rho > 0 else math.inf, compute_t0(net))
    return 0.5 * bound if math.isfinite(bound) else 1.0


# -- pair bookkeeping ------------------------------------------------------------------


def _frame_keys(A, n):
    coo = sp.coo_matrix(A)
    keep = coo.data != 0
    return coo.row[keep].astype(np.int64) * n + coo.col[keep], coo.data[keep]


def _reverse_index(keys, n):
    """Row of pair (j, i) for every row (i, j) of ``keys`` (any order); -1 when absent."""
    if len(keys) == 0:
        return np.zeros(0, np.int64)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    rkeys = (keys % n) * n + keys // n
    pos = np.minimum(np.searchsorted(sk, rkeys), len(keys) - 1)
    return np.where(sk[pos] == rkeys, order[pos], -1).astype(np.int64)


def _chunks(P):
    return [(lo, min(lo + CHUNK, P)) for lo in range(0, P, CHUNK)]


def _run(tasks, threads):
    """Run callables in order; results are returned in submission order."""
    if threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


# -- slice kernels ---------------------------------------------------------------------


def _z_chunk(a, b, t):
    """Slices of Z for one chunk of pairs.

    Slice (i, j) solves ``Z (I - t^2 B) = t U`` with ``U[r, s] = a_s`` and
    ``B[k, s] = a_s * sum_{m=k..s} b_m`` for ``k <= s`` (``b`` the reverse pair).
    The matrix ``I - t^2 B`` is upper triangular, so columns are produced left to right.
    """
    c, N = a.shape
    t2 = t * t
    Z = np.zeros((c, N, N))
    for s in range(N):
        suffix_b = np.cumsum(b[:, s::-1], axis=1)[:, ::-1]  # sum_{m=k..s} b_m for k = 0..s
        Bcol = suffix_b * a[:, s, None]
        pivot = 1.0 - t2 * Bcol[:, s]
        if np.any(pivot <= 0):
            raise ParameterError(f"t={t} is not below t0: 1 - t^2 a b <= 0 in frame {s + 1}")
        num = t * np.broadcast_to(a[:, s, None], (c, s + 1))
        if s:
            num = num + t2 * np.einsum("prk,pk->pr", Z[:, : s + 1, :s], Bcol[:, :s])
        Z[:, : s + 1, s] = num / pivot[:, None]
    return Z


def _diag_chunk(I, a, Zrev, t, n):
    """Contribution of a chunk of pairs to the block diagonals of ``t A Z``.

    For pair (i, j) with reverse slice ``Zrev = Z_(j,i)``,
    ``G[r, s] = sum_{m=r..s} a_m Zrev[m, s]``; summing ``t G`` over j gives
    entry (i, i) of block (r, s).
    """
    G = np.cumsum((a[:, :, None] * Zrev)[:, ::-1, :], axis=1)[:, ::-1, :]
    G = np.triu(G)
    starts = np.flatnonzero(np.r_[True, I[1:] != I[:-1]])
    return I[starts], t * np.add.reduceat(G, starts, axis=0)


def _diagonal_factor(n, I, J, zdiag, ddiag, frame):
    """Factorize block ``I - Z_rr + D_rr``."""
    nz = zdiag != 0
    off = sp.coo_matrix((-zdiag[nz], (I[nz], J[nz])), shape=(n, n)).tocsr()
    mat = off + sp.diags(1.0 + ddiag, format="csr")
    return BlockFactor(mat, frame=frame)


# -- solver ----------------------------------------------------------------------------


class _Storage:
    """Buffers with spare capacity in both the pair and the frame dimension.

    Rows are node pairs in insertion order (sorted by key for a network built
    from scratch, new pairs appended at the end).  ``P`` and ``N`` count the
    filled region; a solver whose sizes match them owns the free space and may
    append in place.  Everything inside the filled region is never rewritten.
    """

    def __init__(self, n, Pcap, Ncap):
        self.keys = np.zeros(Pcap, np.int64)
        self.a = np.zeros((Pcap, Ncap))
        self.Z = np.zeros((Pcap, Ncap, Ncap))
        self.Dg = np.zeros((n, Ncap, Ncap))
        self.P = 0
        self.N = 0

    @property
    def capacity(self):
        return self.a.shape

    @classmethod
    def wrap(cls, keys, a, Z, Dg):
        st = cls.__new__(cls)
        st.keys, st.a, st.Z, st.Dg = keys, a, Z, Dg
        st.P, st.N = a.shape
        return st

    def copy_with(self, P, N, Pcap, Ncap):
        """New storage holding the first P rows and N frames of this one."""
        st = _Storage(self.Dg.shape[0], Pcap, Ncap)
        st.keys[:P] = self.keys[:P]
        st.a[:P, :N] = self.a[:P, :N]
        st.Z[:P, :N, :N] = self.Z[:P, :N, :N]
        st.Dg[:, :N, :N] = self.Dg[:, :N, :N]
        st.P, st.N = P, N
        return st


class NBTSolver:
    """Factored form of ``M = I - Z + dd*(t A Z)`` for one temporal network and one t.

    ``solve`` applies ``Psi(A, t) = M^{-1}`` by block back substitution.  Instances
    are immutable; :meth:`append_frame` returns a new solver for the network
    extended by one frame, reusing every cached quantity of this one.

    Besides Z and the diagonal correction, two per-pair vectors are cached so
    that an append touches only O(P N) new numbers before the final solve:
    ``Z 1`` and ``Z v`` with ``v[s] = sum_{m >= s} b_m`` (``b`` the weights of the
    reverse pair).
    """

    def __init__(self, n, t, storage, P, N, factors, Z1, Zv, psi_ones=None):
        self.n = n
        self.t = t
        self._st = storage
        self._P = P
        self._N = N
        self.I = self.keys // n
        self.J = self.keys % n
        self.rev = _reverse_index(self.keys, n)
        self.factors = tuple(factors)
        self._Z1 = Z1
        self._Zv = Zv
        self._psi_ones = psi_ones

    @property
    def N(self):
        return self._N

    @property
    def num_pairs(self):
        return self._P

    @property
    def keys(self):
        return self._st.keys[: self._P]

    @property
    def a(self):
        """``(P, N)`` pair weights per frame."""
        return self._st.a[: self._P, : self._N]

    @property
    def Z(self):
        """``(P, N, N)`` slices of Z, one per active pair."""
        return self._st.Z[: self._P, : self._N, : self._N]

    @property
    def Dg(self):
        """``(n, N, N)``: ``Dg[i, r, s]`` is entry (i, i) of block (r, s) of the diagonal correction."""
        return self._st.Dg[:, : self._N, : self._N]

    def _owns_tail(self):
        return self._st.P == self._P and self._st.N == self._N

    def reserve(self, frames: int, pairs: int = 0) -> "NBTSolver":
        """Equivalent solver whose storage has room for ``frames`` more frames and ``pairs`` more pairs."""
        Pcap, Ncap = self._st.capacity
        if self._owns_tail() and Ncap >= self._N + frames and Pcap >= self._P + pairs:
            return self
        st = self._st.copy_with(self._P, self._N, self._P + pairs, self._N + frames)
        return NBTSolver(self.n, self.t, st, self._P, self._N, self.factors, self._Z1, self._Zv, self._psi_ones)

    @classmethod
    def from_network(cls, net: TemporalNetwork, t: float, threads: int = 1) -> "NBTSolver":
        if not t >= 0:
            raise ParameterError("t must be nonnegative")
        t = float(t)
        t0 = compute_t0(net)
        if not t < t0:
            raise ParameterError(f"t={t} is not below t0={t0}")
        n, N = net.n, net.N
        frames = assemble_time_evolving(net).frames
        fk = [_frame_keys(A, n) for A in frames]
        keys = np.unique(np.concatenate([k for k, _ in fk])) if fk else np.zeros(0, np.int64)
        P = len(keys)
        a = np.zeros((P, N))
        for s, (k, w) in enumerate(fk):
            a[np.searchsorted(keys, k), s] = w
        rev = _reverse_index(keys, n)
        b = np.where(rev[:, None] >= 0, a[np.maximum(rev, 0)], 0.0)
        Z = np.empty((P, N, N))

        def z_task(lo, hi):
            def run():
                Z[lo:hi] = _z_chunk(a[lo:hi], b[lo:hi], t)
            return run

        _run([z_task(lo, hi) for lo, hi in _chunks(P)], threads)

        I, J = keys // n, keys % n
        with_rev = np.flatnonzero(rev >= 0)
        Dg = np.zeros((n, N, N))

        def d_task(lo, hi):
            sel = with_rev[lo:hi]
            return lambda: _diag_chunk(I[sel], a[sel], Z[rev[sel]], t, n)

        for rows, vals in _run([d_task(lo, hi) for lo, hi in _chunks(len(with_rev))], threads):
            Dg[rows] += vals
        factors = [_diagonal_factor(n, I, J, Z[:, r, r], Dg[:, r, r], r + 1) for r in range(N)]
        v = np.cumsum(b[:, ::-1], axis=1)[:, ::-1]
        Z1 = Z.sum(axis=2)
        Zv = np.einsum("prs,ps->pr", Z, v)
        return cls(n, t, _Storage.wrap(keys, a, Z, Dg), P, N, factors, Z1, Zv)

    # -- solves --------------------------------------------------------------------------

    def _offdiag_apply(self, r, x):
        """``sum_{s>r} M[r, s] x[s]`` for block row r (0-based)."""
        if r >= self.N - 1:
            return np.zeros(self.n)
        zr = self.Z[:, r, r + 1:]
        contrib = np.einsum("ps,sp->p", zr, x[r + 1:, self.J])
        out = -np.bincount(self.I, weights=contrib, minlength=self.n)
        out += np.einsum("is,si->i", self.Dg[:, r, r + 1:], x[r + 1:])
        return out

    def solve(self, rhs) -> np.ndarray:
        """``Psi(A, t) rhs`` for ``rhs`` of shape ``(N, n)`` or ``(nN,)``."""
        R = np.asarray(rhs, dtype=np.float64).reshape(self.N, self.n)
        x = np.zeros_like(R)
        for r in range(self.N - 1, -1, -1):
            x[r] = self.factors[r].solve(R[r] - self._offdiag_apply(r, x))
        return x.reshape(np.shape(rhs))

    def apply_M(self, x) -> np.ndarray:
        """``M x`` for ``x`` of shape ``(N, n)``."""
        X = np.asarray(x, dtype=np.float64).reshape(self.N, self.n)
        out = np.zeros_like(X)
        for r in range(self.N):
            diag = X[r] + self.Dg[:, r, r] * X[r]
            diag -= np.bincount(self.I, weights=self.Z[:, r, r] * X[r, self.J], minlength=self.n)
            out[r] = diag + self._offdiag_apply(r, X)
        return out.reshape(np.shape(x))

    def psi_ones(self) -> np.ndarray:
        """``Psi(A, t) 1`` as an ``(N, n)`` array."""
        if self._psi_ones is None:
            self._psi_ones = self.solve(np.ones((self.N, self.n)))
        return self._psi_ones

    def residual(self, x=None) -> float:
        x = self.psi_ones() if x is None else x
        return float(np.abs(self.apply_M(x) - 1.0).max())

    # -- ring views ----------------------------------------------------------------------

    def factors_as_ring(self):
        pairs = np.stack([self.I, self.J], axis=1)
        Zr = RingMatrix(self.n, self.N, pairs, self.Z, upper=True)
        dpairs = np.stack([np.arange(self.n)] * 2, axis=1)
        Dr = RingMatrix(self.n, self.N, dpairs, self.Dg, upper=True).pruned()
        return Zr, Dr

    # -- frame append --------------------------------------------------------------------

    def append_frame(self, frame, t: float | None = None) -> "NBTSolver":
        """Solver for the network extended by one final frame.

        With ``Z_N``, ``Psi_N`` the single-frame quantities of the new frame, the
        extended ``Psi`` is ``[[Psi_old, -Psi_old X Psi_N], [0, Psi_N]]``.  Only
        the new block column of Z and of the diagonal correction is formed, one
        new diagonal block is factorized, and ``Psi_new 1`` is obtained from one
        solve against ``Psi_N`` and one against ``Psi_old``.
        """
        if t is not None and float(t) != self.t:
            raise ParameterError(f"cached factors were built for t={self.t}, not t={t}")
        t, n, m, P_old = self.t, self.n, self.N, self._P
        A_new = sp.csr_matrix(frame, dtype=np.float64)
        if A_new.shape != (n, n):
            raise ValidationError(f"appended frame must be {n} x {n}")
        if A_new.nnz and A_new.data.min() < 0:
            raise ValidationError("appended frame has a negative weight")
        fkeys, fw = _frame_keys(A_new, n)
        old_keys = self.keys
        order = np.argsort(old_keys, kind="stable")
        pos = np.searchsorted(old_keys[order], fkeys)
        known = pos < P_old
        known[known] = old_keys[order[pos[known]]] == fkeys[known]
        fresh = fkeys[~known]  # sorted, since fkeys is
        P = P_old + len(fresh)
        keys = np.concatenate([old_keys, fresh])
        rows = np.empty(len(fkeys), np.int64)
        rows[known] = order[pos[known]]
        rows[~known] = P_old + np.arange(len(fresh))
        rev = _reverse_index(keys, n)
        has_rev = rev >= 0
        I, J = keys // n, keys % n

        alpha = np.zeros(P)
        alpha[rows] = fw
        beta = np.where(has_rev, alpha[np.maximum(rev, 0)], 0.0)
        pivot = 1.0 - t * t * alpha * beta
        if np.any(pivot <= 0):
            raise ParameterError(f"t={t} is not below t0 of the extended network; recompute with a smaller t")
        zN = t * alpha / pivot  # single-frame Z of the new frame, slice by slice

        # new block column of Z: Z_old*tA_old^{*T}*Z_N + Z_old*tA_N^{*T}*Z_N + Z_N
        Z_col = np.repeat(zN[:, None], m, axis=1)
        Z_col[:P_old] += (t * self._Zv + self._Z1 * (t * beta[:P_old, None])) * zN[:P_old, None]

        # dd*[t A_old (Z column)] + dd*(t A_N Z_N): diagonals of the new block column
        sel = np.flatnonzero(has_rev)
        D_col = np.zeros((n, m))
        D_N = np.zeros(n)
        if len(sel):
            a_old = np.zeros((len(sel), m))
            inside = sel < P_old
            a_old[inside] = self.a[sel[inside]]
            G = np.cumsum((a_old * Z_col[rev[sel]])[:, ::-1], axis=1)[:, ::-1]
            D_col += _group_rows(I[sel], t * G, n)
            D_N += np.bincount(I[sel], weights=t * alpha[sel] * zN[rev[sel]], minlength=n)
        D_col += D_N[:, None]

        factor_N = _diagonal_factor(n, I, J, zN, D_N, m + 1)
        y_N = factor_N.solve(np.ones(n))  # Psi_N 1
        # X y_N with X = -Z column + dd* column
        zy = Z_col * y_N[J][:, None]
        Xy = np.empty((m, n))
        for r in range(m):
            Xy[r] = -np.bincount(I, weights=zy[:, r], minlength=n) + D_col[:, r] * y_N
        top = self.solve(np.ones((m, n)) - Xy)  # Psi_old (1 - X Psi_N 1)
        psi_ones = np.vstack([top, y_N])

        # cached products for the next append
        Z1 = np.zeros((P, m + 1))
        Zv = np.zeros((P, m + 1))
        Z1[:P_old, :m] = self._Z1
        Zv[:P_old, :m] = self._Zv + beta[:P_old, None] * self._Z1
        Z1[:, :m] += Z_col
        Zv[:, :m] += beta[:, None] * Z_col
        Z1[:, m] = zN
        Zv[:, m] = zN * beta

        Pcap, Ncap = self._st.capacity
        if self._owns_tail() and Pcap >= P and Ncap >= m + 1:
            st = self._st
        else:
            st = self._st.copy_with(P_old, m, max(P, P_old + P_old // 2), max(m + 1, 2 * m))
        st.keys[P_old:P] = fresh
        st.a[:P, m] = alpha
        st.Z[:P, :m, m] = Z_col
        st.Z[:P, m, m] = zN
        st.Dg[:, :m, m] = D_col
        st.Dg[:, m, m] = D_N
        st.P, st.N = P, m + 1
        return NBTSolver(n, t, st, P, m + 1, self.factors + (factor_N,), Z1, Zv, psi_ones)


def _group_rows(rows, values, n):
    """Sum ``values`` (one row per entry of ``rows``) into an ``(n, ...)`` array."""
    out = np.zeros((n,) + values.shape[1:])
    np.add.at(out, rows, values)
    return out


# -- public API ------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiFactors:
    """``Z``, ``D`` and the block matrix ``M = I - Z + D`` (with ``Psi = M^{-1}``)."""

    Z: RingMatrix
    D: RingMatrix
    t: float
    solver: NBTSolver

    @property
    def n(self):
        return self.Z.n

    @property
    def N(self):
        return self.Z.N

    def M_block(self, r: int, s: int) -> np.ndarray:
        """Block (r, s) of M, 1-based."""
        base = np.eye(self.n) if r == s else np.zeros((self.n, self.n))
        return base - self.Z.block(r - 1, s - 1) + self.D.block(r - 1, s - 1)

    def M_dense(self) -> np.ndarray:
        """Dense M; debugging only."""
        return np.eye(self.n * self.N) - self.Z.to_blocks() + self.D.to_blocks()


def psi_factors(net: TemporalNetwork, t: float, threads: int = 1) -> PsiFactors:
    solver = NBTSolver.from_network(net, t, threads=threads)
    Z, D = solver.factors_as_ring()
    return PsiFactors(Z, D, float(t), solver)


def _report(solver, start, method, t0, clock, extra=None):
    x = solver.psi_ones()
    meta = {"t0": t0, "residual": solver.residual(x), "active_pairs": solver.num_pairs}
    meta.update(extra or {})
    meta["wall_time_ms"] = (time.perf_counter() - clock) * 1e3
    return CentralityReport(x[start - 1].copy(), (start, solver.N), solver.t, method, meta)


def nbt_katz_temporal(net: TemporalNetwork, t: float, start: int = 1, threads: int = 1) -> CentralityReport:
    """Nonbacktracking Katz centrality of the subnetwork of frames ``start..N``.

    Node i scores entry ``(start - 1) n + i`` of ``Psi(A, t) 1``.
    """
    clock = time.perf_counter()
    if not 1 <= start <= net.N:
        raise IndexError(f"start frame {start} outside 1..{net.N}")
    if not t > 0:
        raise ParameterError("t must be positive")
    solver = NBTSolver.from_network(net, t, threads=threads)
    return _report(solver, start, "nbt", compute_t0(net), clock)


def nbt_append_frame(solver: NBTSolver, frame, t: float | None = None) -> NBTSolver:
    """Extend cached nonbacktracking factors by one final frame (see :meth:`NBTSolver.append_frame`)."""
    return solver.append_frame(frame, t)


def nbt_katz_incremental(net: TemporalNetwork, t: float, start: int = 1) -> CentralityReport:
    """Nonbacktracking Katz built frame by frame through the append update."""
    clock = time.perf_counter()
    if not t > 0:
        raise ParameterError("t must be positive")
    t0 = compute_t0(net)
    if not t < t0:
        raise ParameterError(f"t={t} is not below t0={t0}")
    frames = assemble_time_evolving(net).frames
    solver = NBTSolver.from_network(net.subnetwork(1, 1), t)
    for A in frames[1:]:
        solver = solver.append_frame(A)
    return _report(solver, start, "nbt-update", t0, clock)


def static_nbt_matrices(A, t: float):
    """``A~(t)`` and the diagonal of ``D~(t)`` for a static weighted digraph.

    ``A~_ij = w_ij`` without a reciprocal edge and ``w_ij / (1 - t^2 w_ij w_ji)``
    with one; ``D~_ii`` sums ``w_ij w_ji / (1 - t^2 w_ij w_ji)`` over reciprocal
    neighbours j.
    """
    A = sp.csr_matrix(A, dtype=np.float64)
    n = A.shape[0]
    coo = A.tocoo()
    rows, cols, w = coo.row, coo.col, coo.data
    back = np.asarray(A[cols, rows]).ravel() if len(w) else np.zeros(0)
    recip = back > 0
    denom = 1.0 - t * t * w * back
    if np.any(denom[recip] <= 0):
        raise ParameterError(f"t={t} is not below t0={compute_t0([A])}")
    At_vals = np.where(recip, w / np.where(recip, denom, 1.0), w)
    A_tilde = sp.csr_matrix((At_vals, (rows, cols)), shape=(n, n))
    d_vals = np.where(recip, w * back / np.where(recip, denom, 1.0), 0.0)
    D_tilde = np.bincount(rows, weights=d_vals, minlength=n)
    return A_tilde, D_tilde


def static_nbt_katz(frame, t: float) -> CentralityReport:
    """Nonbacktracking Katz of a single weighted digraph: ``[I - t A~ + t^2 D~]^{-1} 1``."""
    clock = time.perf_counter()
    if not t > 0:
        raise ParameterError("t must be positive")
    A_tilde, D_tilde = static_nbt_matrices(frame, t)
    n = A_tilde.shape[0]
    M = sp.identity(n, format="csr") - t * A_tilde + sp.diags(t * t * D_tilde, format="csr")
    x = BlockFactor(M, frame=1).solve(np.ones(n))
    meta = {
        "t0": compute_t0([frame]),
        "residual": float(np.abs(M @ x - 1.0).max()),
        "wall_time_ms": (time.perf_counter() - clock) * 1e3,
    }
    return CentralityReport(x, (1, 1), float(t), "static-nbt", meta)
