"""Random temporal networks: one Erdős–Rényi digraph per frame."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .temporal_graph import TemporalNetwork

SEED_ENV = "TEMPO_SEED"


@dataclass(frozen=True)
class GeneratorSpec:
    """Random-network family.

    ``density="sparse"`` targets ``3(n - 1)`` expected edges per frame and
    ``"dense"`` targets ``3n(n - 1)/10``.  ``weights`` is ``"unit"`` or
    ``"uniform"`` (uniform on (0, 1]).
    """

    n: int
    N: int = 10
    density: str = "sparse"
    weights: str = "unit"
    seed: int = 0
    loops: bool = False

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ValidationError(f"generator needs n >= 2, got {self.n!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValidationError(f"generator needs N >= 1, got {self.N!r}")
        if self.density not in ("sparse", "dense"):
            raise ValidationError(f"unknown density {self.density!r}")
        if self.weights not in ("unit", "uniform"):
            raise ValidationError(f"unknown weight law {self.weights!r}")

    @property
    def slots(self) -> int:
        """Number of ordered node pairs that may carry an edge."""
        return self.n * self.n if self.loops else self.n * (self.n - 1)

    @property
    def expected_edges(self) -> float:
        n = self.n
        return 3.0 * (n - 1) if self.density == "sparse" else 3.0 * n * (n - 1) / 10.0

    @property
    def edge_probability(self) -> float:
        return min(1.0, self.expected_edges / self.slots)

    def with_env_seed(self) -> "GeneratorSpec":
        """Copy whose seed is replaced by ``$TEMPO_SEED`` when that variable is set."""
        raw = os.environ.get(SEED_ENV)
        if raw is None or raw == "":
            return self
        try:
            seed = int(raw)
        except ValueError as exc:
            raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from exc
        return GeneratorSpec(**{**asdict(self), "seed": seed})

    def to_dict(self) -> dict:
        return asdict(self)


def parse_generator_spec(text: str) -> GeneratorSpec:
    """Parse ``"sparse:n=500,N=10,seed=7"``; optional keys ``weights`` and ``loops``."""
    density, _, rest = text.partition(":")
    kwargs: dict = {"density": density.strip()}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValidationError(f"generator option {item!r} is not key=value")
        key = key.strip()
        if key in ("n", "N", "seed"):
            try:
                kwargs[key] = int(value)
            except ValueError as exc:
                raise ValidationError(f"generator option {key} must be an integer") from exc
        elif key == "weights":
            kwargs[key] = value.strip()
        elif key == "loops":
            kwargs[key] = value.strip().lower() in ("1", "true", "yes")
        else:
            raise ValidationError(f"unknown generator option {key!r}")
    if "n" not in kwargs:
        raise ValidationError("generator spec needs n=<int>")
    return GeneratorSpec(**kwargs)


def generate(spec: GeneratorSpec) -> TemporalNetwork:
    """Draw a temporal network with every ordered pair present independently per frame.

    The edge count of a frame is drawn from Binomial(slots, p) and that many
    distinct slots are then chosen uniformly, which is the same distribution as
    one Bernoulli(p) trial per slot.
    """
    n, p = spec.n, spec.edge_probability
    rng = np.random.default_rng(spec.seed)
    frames = []
    for _ in range(spec.N):
        count = int(rng.binomial(spec.slots, p))
        picks = np.sort(rng.choice(spec.slots, size=count, replace=False))
        if spec.loops:
            rows, cols = np.divmod(picks, n)
        else:
            # slot q enumerates off-diagonal pairs row by row, n - 1 per row
            rows, off = np.divmod(picks, n - 1)
            cols = off + (off >= rows)
        w = np.ones(count) if spec.weights == "unit" else 1.0 - rng.random(count)
        frames.append(sp.csr_matrix((w, (rows, cols)), shape=(n, n)))
    return TemporalNetwork.from_matrices(frames)
