"""Temporal network data model, CSV ingestion and the time-evolving adjacency matrix.

Nodes and frames are 1-based in files and in the public ``frame``/``window``
arguments; all arrays are 0-based.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

DENSE_MATERIALIZE_LIMIT = 2000

_HEADER_RE = re.compile(r"^\s*(?:n\s*=\s*(\d+))?\s*(?:N\s*=\s*(\d+))?\s*$")


@dataclass(frozen=True)
class FrameGraph:
    """Edges of a single frame, stored as 0-based coordinate arrays."""

    frame_index: int
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("sources", "targets"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not (len(self.sources) == len(self.targets) == len(w)):
            raise ValidationError("edge arrays must have equal length")
        if len(w) and not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ValidationError(f"frame {self.frame_index}: edge weights must be finite and strictly positive")

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    def edges(self):
        """Yield ``(source, target, weight)`` with 1-based node ids."""
        for u, v, w in zip(self.sources, self.targets, self.weights):
            yield int(u) + 1, int(v) + 1, float(w)


@dataclass(frozen=True)
class TemporalNetwork:
    """Ordered sequence of weighted digraph frames on the node set ``[n]``."""

    n: int
    frames: tuple
    timestamps: tuple | None = None
    _csr: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValidationError("a temporal network needs at least one node")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 1:
            raise ValidationError("a temporal network needs at least one frame")
        mats = []
        for pos, fr in enumerate(self.frames):
            if fr.frame_index != pos + 1:
                raise ValidationError(f"frame at position {pos + 1} has index {fr.frame_index}")
            if fr.num_edges:
                lo = min(fr.sources.min(), fr.targets.min())
                hi = max(fr.sources.max(), fr.targets.max())
                if lo < 0 or hi >= self.n:
                    raise ValidationError(f"frame {fr.frame_index}: node id outside 1..{self.n}")
            key = fr.sources * self.n + fr.targets
            if len(np.unique(key)) != len(key):
                raise ValidationError(f"frame {fr.frame_index}: duplicate edge")
            m = sp.csr_matrix((fr.weights, (fr.sources, fr.targets)), shape=(self.n, self.n))
            m.sort_indices()
            mats.append(m)
        object.__setattr__(self, "_csr", tuple(mats))
        if self.timestamps is not None:
            ts = tuple(float(x) for x in self.timestamps)
            if len(ts) != len(self.frames):
                raise ValidationError("need one timestamp per frame")
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise ValidationError("timestamps must be non-decreasing")
            object.__setattr__(self, "timestamps", ts)

    def __eq__(self, other):
        if not isinstance(other, TemporalNetwork):
            return NotImplemented
        if self.n != other.n or self.N != other.N or self.timestamps != other.timestamps:
            return False
        return all((a != b).nnz == 0 for a, b in zip(self._csr, other._csr))

    __hash__ = None

    @property
    def N(self) -> int:
        return len(self.frames)

    @property
    def num_edges(self) -> int:
        return sum(fr.num_edges for fr in self.frames)

    # -- constructors -----------------------------------------------------------------

    @classmethod
    def from_matrices(cls, matrices: Iterable, timestamps=None) -> "TemporalNetwork":
        """Build from per-frame adjacency matrices (dense or sparse, n x n)."""
        frames = []
        n = None
        for tau, mat in enumerate(matrices, start=1):
            coo = sp.coo_matrix(mat)
            if coo.shape[0] != coo.shape[1] or (n is not None and coo.shape[0] != n):
                raise ValidationError("all frames must be square with a common size")
            n = coo.shape[0]
            coo.sum_duplicates()
            keep = coo.data != 0
            if np.any(coo.data[keep] < 0):
                raise ValidationError(f"frame {tau}: negative weight")
            frames.append(FrameGraph(tau, coo.row[keep], coo.col[keep], coo.data[keep]))
        if n is None:
            raise ValidationError("a temporal network needs at least one frame")
        return cls(n, tuple(frames), timestamps)

    @classmethod
    def from_edges(cls, n: int, frames: Sequence[Iterable[tuple]], timestamps=None) -> "TemporalNetwork":
        """Build from per-frame edge lists of 1-based ``(source, target[, weight])``."""
        out = []
        for tau, edges in enumerate(frames, start=1):
            src, dst, wts = [], [], []
            for e in edges:
                src.append(int(e[0]) - 1)
                dst.append(int(e[1]) - 1)
                wts.append(float(e[2]) if len(e) > 2 else 1.0)
            out.append(FrameGraph(tau, src, dst, wts))
        return cls(n, tuple(out), timestamps)

    def subnetwork(self, first: int, last: int | None = None) -> "TemporalNetwork":
        """Temporal subnetwork ``(G[first], ..., G[last])`` re-indexed from frame 1."""
        last = self.N if last is None else last
        if not 1 <= first <= last <= self.N:
            raise IndexError(f"window {first}:{last} outside 1..{self.N}")
        frames = [
            FrameGraph(pos, fr.sources, fr.targets, fr.weights)
            for pos, fr in enumerate(self.frames[first - 1:last], start=1)
        ]
        ts = None if self.timestamps is None else self.timestamps[first - 1:last]
        return TemporalNetwork(self.n, tuple(frames), ts)

    def append(self, matrix) -> "TemporalNetwork":
        extra = TemporalNetwork.from_matrices([matrix])
        if extra.n != self.n:
            raise ValidationError("appended frame has the wrong size")
        fr = extra.frames[0]
        return TemporalNetwork(self.n, self.frames + (FrameGraph(self.N + 1, fr.sources, fr.targets, fr.weights),))

    def scaled(self, alpha: float) -> "TemporalNetwork":
        return TemporalNetwork(
            self.n,
            tuple(FrameGraph(f.frame_index, f.sources, f.targets, f.weights * alpha) for f in self.frames),
            self.timestamps,
        )


# -- file format ----------------------------------------------------------------------


@dataclass(frozen=True)
class ParseOptions:
    merge: str = "error"  # or "sum"
    n: int | None = None
    N: int | None = None
    default_weight: float = 1.0


def _parse_int(tok: str, what: str, lineno: int) -> int:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"{what} {tok!r} is not an integer", lineno) from None
    if not value.is_integer():
        raise ParseError(f"{what} {tok!r} is not an integer", lineno)
    return int(value)


def parse_temporal_edgelist(text, options: ParseOptions | None = None) -> TemporalNetwork:
    """Parse ``frame,source,target[,weight]`` lines into a :class:`TemporalNetwork`.

    ``text`` may be a string or a text stream.  Lines starting with ``#`` are
    comments; a line ``n=<int> N=<int>`` declares dimensions larger than the ids
    observed in the data.
    """
    options = options or ParseOptions()
    if options.merge not in ("error", "sum"):
        raise ValidationError(f"unknown merge policy {options.merge!r}")
    stream = io.StringIO(text) if isinstance(text, str) else text
    header_n, header_N = options.n, options.N
    edges: dict[tuple[int, int, int], float] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            m = _HEADER_RE.match(line)
            if not m or not any(m.groups()):
                raise ParseError(f"malformed header {line!r}", lineno)
            if m.group(1):
                header_n = max(header_n or 0, int(m.group(1)))
            if m.group(2):
                header_N = max(header_N or 0, int(m.group(2)))
            continue
        toks = [t.strip() for t in line.split(",")]
        if len(toks) not in (3, 4) or any(t == "" for t in toks):
            raise ParseError(f"expected frame,source,target[,weight], got {line!r}", lineno)
        frame = _parse_int(toks[0], "frame id", lineno)
        src = _parse_int(toks[1], "source id", lineno)
        dst = _parse_int(toks[2], "target id", lineno)
        if len(toks) == 4:
            try:
                w = float(toks[3])
            except ValueError:
                raise ParseError(f"weight {toks[3]!r} is not a number", lineno) from None
        else:
            w = float(options.default_weight)
        if frame < 1:
            raise ValidationError(f"line {lineno}: frame id must be >= 1, got {frame}")
        if src < 1 or dst < 1:
            raise ValidationError(f"line {lineno}: node ids must be >= 1")
        if not (math.isfinite(w) and w > 0):
            raise ValidationError(f"line {lineno}: weight must be strictly positive, got {w}")
        key = (frame, src, dst)
        if key in edges:
            if options.merge == "error":
                raise ValidationError(f"line {lineno}: duplicate edge {src}->{dst} in frame {frame}")
            edges[key] += w
        else:
            edges[key] = w
    max_node = max((max(s, d) for _, s, d in edges), default=0)
    max_frame = max((f for f, _, _ in edges), default=0)
    n = max(max_node, header_n or 0)
    N = max(max_frame, header_N or 0)
    if n < 1 or N < 1:
        raise ValidationError("input declares no nodes or no frames")
    per_frame: list[list[tuple]] = [[] for _ in range(N)]
    for (f, s, d), w in sorted(edges.items()):
        per_frame[f - 1].append((s, d, w))
    return TemporalNetwork.from_edges(n, per_frame)


def read_temporal_edgelist(path, options: ParseOptions | None = None) -> TemporalNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_temporal_edgelist(fh, options)


def serialize_temporal_edgelist(net: TemporalNetwork) -> str:
    """Inverse of :func:`parse_temporal_edgelist`; rows sorted by (frame, source, target)."""
    lines = [f"n={net.n} N={net.N}"]
    for fr in net.frames:
        order = np.lexsort((fr.targets, fr.sources))
        for e in order:
            lines.append(f"{fr.frame_index},{fr.sources[e] + 1},{fr.targets[e] + 1},{float(fr.weights[e])!r}")
    return "\n".join(lines) + "\n"


# -- adjacency ------------------------------------------------------------------------


def frame_adjacency(net: TemporalNetwork, tau: int) -> sp.csr_matrix:
    """Adjacency matrix of frame ``tau`` (1-based) as a CSR matrix."""
    if not 1 <= tau <= net.N:
        raise IndexError(f"frame {tau} outside 1..{net.N}")
    return net._csr[tau - 1]


class TimeEvolvingAdjacency:
    """Implicit block upper-triangular matrix whose ``(r, s)`` block is ``A[s]`` for ``r <= s``."""

    def __init__(self, frames: Sequence[sp.csr_matrix]):
        self.frames = tuple(frames)
        self.n = self.frames[0].shape[0]
        self.N = len(self.frames)

    @property
    def shape(self):
        return (self.n * self.N, self.n * self.N)

    def block(self, r: int, s: int):
        """Block ``(r, s)`` with 1-based block indices, as a sparse matrix."""
        if not (1 <= r <= self.N and 1 <= s <= self.N):
            raise IndexError(f"block ({r}, {s}) outside the {self.N} x {self.N} grid")
        if r <= s:
            return self.frames[s - 1]
        return sp.csr_matrix((self.n, self.n))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Product with a vector of length ``nN`` (or an ``(N, n)`` array)."""
        X = np.asarray(x).reshape(self.N, self.n)
        out = np.empty_like(X, dtype=np.result_type(X, np.float64))
        acc = np.zeros(self.n, dtype=out.dtype)
        for s in range(self.N - 1, -1, -1):
            acc = acc + self.frames[s] @ X[s]
            out[s] = acc
        return out.reshape(np.shape(x))

    def frame_stack(self) -> np.ndarray:
        """Dense ``(N, n, n)`` stack of frame matrices."""
        return np.stack([f.toarray() for f in self.frames])

    def materialize(self, force: bool = False) -> np.ndarray:
        """Dense ``nN x nN`` matrix; debugging only, refused above n*N = 2000 unless forced."""
        if self.n * self.N > DENSE_MATERIALIZE_LIMIT and not force:
            raise ValidationError(
                f"refusing to materialize a {self.n * self.N}-square matrix (limit {DENSE_MATERIALIZE_LIMIT})"
            )
        n, N = self.n, self.N
        dense = np.zeros((n * N, n * N))
        for s, f in enumerate(self.frames):
            block = f.toarray()
            for r in range(s + 1):
                dense[r * n:(r + 1) * n, s * n:(s + 1) * n] = block
        return dense


def assemble_time_evolving(net: TemporalNetwork) -> TimeEvolvingAdjacency:
    return TimeEvolvingAdjacency(net._csr)
