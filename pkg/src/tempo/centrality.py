"""Walk-based centralities on temporal networks: temporal Katz and f-centralities.

All computations act on the implicit block upper-triangular adjacency matrix;
nothing of size nN x nN is formed.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._linalg import BlockFactor
from .errors import NumericalError, ParameterError
from .temporal_graph import TemporalNetwork, assemble_time_evolving

DENSE_EIG_SIZE = 1000
MAX_SERIES_TERMS = 2000


@dataclass(frozen=True)
class CoefficientFunction:
    """Power series ``f(z) = sum_k c_k z^k`` with nonnegative coefficients."""

    name: str
    coefficient: Callable[[int], float]
    radius: float = math.inf
    kind: str = "series"  # "resolvent" | "exponential" | "series"

    def __post_init__(self):
        if self.kind not in ("resolvent", "exponential", "series"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not self.radius > 0:
            raise ValueError("radius of convergence must be positive")

    def coefficients(self, count: int) -> np.ndarray:
        c = np.array([float(self.coefficient(k)) for k in range(count)])
        if np.any(c < 0):
            raise ValueError(f"{self.name}: coefficients must be nonnegative")
        return c


def katz_function() -> CoefficientFunction:
    return CoefficientFunction("katz", lambda k: 1.0, 1.0, "resolvent")


def exponential_function() -> CoefficientFunction:
    return CoefficientFunction("exp", lambda k: 1.0 / math.factorial(k), math.inf, "exponential")


@dataclass
class CentralityReport:
    scores: np.ndarray
    window: tuple
    t: float
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.scores)

    @property
    def ranking(self) -> np.ndarray:
        """0-based node indices by descending score, ties broken by ascending node id."""
        return np.lexsort((np.arange(self.n), -self.scores))

    @property
    def ranks(self) -> np.ndarray:
        """1-based rank of every node."""
        out = np.empty(self.n, dtype=np.int64)
        out[self.ranking] = np.arange(1, self.n + 1)
        return out

    def to_csv(self) -> str:
        ranks = self.ranks
        lines = ["node,score,rank"]
        lines += [f"{i + 1},{float(s)!r},{int(r)}" for i, (s, r) in enumerate(zip(self.scores, ranks))]
        return "\n".join(lines) + "\n"

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {"method": self.method, "t": self.t, "window": list(self.window), "n": self.n}
        d.update(self.meta)
        d.setdefault("t0", None)
        d.setdefault("residual", None)
        if not include_timing:
            d.pop("wall_time_ms", None)
        else:
            d.setdefault("wall_time_ms", None)
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(_jsonable(self.to_dict(include_timing)), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


# -- spectral radius -------------------------------------------------------------------


def frame_spectral_radius(A) -> float:
    """Spectral radius of one (nonnegative) adjacency matrix."""
    n = A.shape[0]
    nnz = A.nnz if sp.issparse(A) else np.count_nonzero(A)
    if nnz == 0:
        return 0.0
    if n <= DENSE_EIG_SIZE:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        return float(np.abs(np.linalg.eigvals(dense)).max())
    try:
        ev = spla.eigs(sp.csr_matrix(A, dtype=float), k=1, which="LM", return_eigenvectors=False, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(f"spectral radius did not converge: {exc}") from exc
    return float(np.abs(ev).max())


def temporal_spectral_radius(net: TemporalNetwork) -> float:
    """Spectral radius of the time-evolving adjacency matrix: the largest over frames."""
    return max(frame_spectral_radius(A) for A in assemble_time_evolving(net).frames)


def _check_window(net, window):
    first, last = window
    if not (1 <= first <= last <= net.N):
        raise IndexError(f"window {first}:{last} outside 1..{net.N}")
    return int(first), int(last)


# -- Katz ------------------------------------------------------------------------------


def _katz_blocks(frames, t):
    """Block back substitution for ``(I - t A) x = 1``; returns x as ``(N, n)``."""
    N = len(frames)
    n = frames[0].shape[0]
    eye = sp.identity(n, format="csr")
    x = np.zeros((N, n))
    acc = np.zeros(n)  # sum over later frames m of A[m] x[m]
    for r in range(N - 1, -1, -1):
        factor = BlockFactor(eye - t * frames[r], frame=r + 1)
        x[r] = factor.solve(1.0 + t * acc)
        acc = acc + frames[r] @ x[r]
    return x


def katz_temporal(net: TemporalNetwork, t: float, start: int = 1, end: int | None = None, check: bool = True):
    """Temporal Katz centrality of the subnetwork of frames ``start..end``.

    Scores are the block-``start`` entries of ``(I - t A)^{-1} 1`` restricted to
    the window, which equal the product of frame resolvents applied to ones.
    """
    t0_clock = time.perf_counter()
    first, last = _check_window(net, (start, net.N if end is None else end))
    if not t > 0:
        raise ParameterError("t must be positive")
    sub = net if (first, last) == (1, net.N) else net.subnetwork(first, last)
    meta = {}
    if check:
        rho = temporal_spectral_radius(sub)
        meta["rho"] = rho
        if rho > 0 and not t < 1.0 / rho:
            raise ParameterError(f"t={t} is not below 1/rho = {1.0 / rho}")
    adj = assemble_time_evolving(sub)
    x = _katz_blocks(adj.frames, t)
    residual = np.abs(x - t * adj.matvec(x) - 1.0).max()
    meta["residual"] = float(residual)
    meta["wall_time_ms"] = (time.perf_counter() - t0_clock) * 1e3
    return CentralityReport(x[0], (first, last), float(t), "katz", meta)


# -- f-centrality ----------------------------------------------------------------------


def _series_action(adj, v, t, f: CoefficientFunction, tol, max_terms):
    """``sum_k c_k t^k A^k v`` for nonnegative A and v, truncated at a tail bound."""
    norm_inf = float(np.max(sum(np.asarray(A.sum(axis=1)).ravel() for A in adj.frames)))
    x = t * norm_inf
    term = v.copy()
    y = np.zeros_like(v)
    prev_norm = None
    zero_run = 0
    for k in range(max_terms):
        c = float(f.coefficient(k))
        if c < 0:
            raise ValueError(f"{f.name}: coefficient {k} is negative")
        contrib = c * term
        y += contrib
        floor = tol * max(float(np.min(y)), np.finfo(float).tiny)
        if f.kind == "exponential":
            # sum_{j>k} x^j / j! <= x^{k+1}/(k+1)! / (1 - x/(k+2)) when k + 2 > x
            if k + 2 > x:
                log_tail = (k + 1) * math.log(x) - math.lgamma(k + 2) if x > 0 else -math.inf
                bound = math.exp(log_tail) / (1 - x / (k + 2)) * float(np.max(v)) if x > 0 else 0.0
                if bound <= floor:
                    return y, k + 1, bound
        else:
            cur = float(np.max(contrib))
            if cur == 0.0:
                zero_run += 1
                if zero_run >= 20 or not np.any(term):
                    return y, k + 1, 0.0
            else:
                zero_run = 0
                if prev_norm:
                    q = cur / prev_norm
                    if q < 1:
                        est = cur * q / (1 - q)
                        if est <= floor:
                            return y, k + 1, est
                prev_norm = cur
        term = t * adj.matvec(term)
    raise NumericalError(f"{f.name}-series did not reach tolerance {tol} within {max_terms} terms")


def f_centrality(
    net: TemporalNetwork,
    f: CoefficientFunction,
    t: float,
    window: tuple | None = None,
    tol: float = 1e-12,
    max_terms: int = MAX_SERIES_TERMS,
    check: bool = True,
):
    """f-centrality of every node over the temporal subnetwork ``window = (first, last)``.

    The score of node i sums row ``(first - 1) n + i`` of ``f(t A)`` over the
    columns of frames ``first..last``.  Katz-type functions are dispatched to the
    resolvent solver; other functions are evaluated as a truncated power series
    acting on the vector of ones.
    """
    clock = time.perf_counter()
    first, last = _check_window(net, window or (1, net.N))
    if not t > 0:
        raise ParameterError("t must be positive")
    if f.kind == "resolvent":
        rep = katz_temporal(net, t, first, last, check=check)
        return rep
    sub = net if (first, last) == (1, net.N) else net.subnetwork(first, last)
    meta = {}
    if check and math.isfinite(f.radius):
        rho = temporal_spectral_radius(sub)
        meta["rho"] = rho
        if rho > 0 and not t < f.radius / rho:
            raise ParameterError(f"t={t} is not below r/rho = {f.radius / rho}")
    adj = assemble_time_evolving(sub)
    v = np.ones((sub.N, sub.n))
    y, terms, tail = _series_action(adj, v, t, f, tol, max_terms)
    meta.update({"terms": terms, "tail_bound": tail, "residual": tail})
    meta["wall_time_ms"] = (time.perf_counter() - clock) * 1e3
    return CentralityReport(y[0], (first, last), float(t), f"f-{f.name}", meta)
