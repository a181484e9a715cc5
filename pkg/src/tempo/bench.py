"""Timing harness: growth in node count and in frame count."""

from __future__ import annotations

import json
import os
import platform
import statistics
import time
import tracemalloc
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from .centrality import exponential_function, f_centrality
from .errors import ValidationError
from .generate import GeneratorSpec, generate
from .nonbacktracking import NBTSolver, auto_t, nbt_katz_temporal
from .temporal_graph import TemporalNetwork, frame_adjacency

DEFAULT_SIZES = {"sparse": (100, 200, 400, 800), "dense": (50, 100, 200, 400)}
DEFAULT_FRAMES = tuple(range(5, 41, 5))
MIN_MEASURABLE_S = 2e-4


def environment() -> dict:
    from . import __version__

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "tempo": __version__,
        "platform": platform.platform(),
        "cpu_count": os.cpu_count(),
        "clock": "perf_counter",
        "clock_resolution_s": time.get_clock_info("perf_counter").resolution,
    }


def fit_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class BenchmarkReport:
    """Median timings per size and per series, with log-log slopes.

    ``samples`` holds every retained trial as ``(series, size, trial, seconds)``;
    the warm-up run of every point is discarded before anything is recorded.
    """

    mode: str
    config: dict
    sizes: list
    medians: dict  # series -> list of median seconds aligned with sizes
    slopes: dict
    samples: list
    peak_memory_bytes: dict
    env: dict = field(default_factory=environment)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "sizes": list(self.sizes),
            "medians_s": self.medians,
            "slopes": {
                k: {"slope": v, "trials": self.config["trials"], "size_range": [min(self.sizes), max(self.sizes)]}
                for k, v in self.slopes.items()
            },
            "peak_memory_bytes": self.peak_memory_bytes,
            "environment": self.env,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_tsv(self) -> str:
        """Gnuplot-friendly table: one row per size, one column per series."""
        series = sorted(self.medians)
        lines = [f"# mode={self.mode} trials={self.config['trials']} seed={self.config['seed']}"]
        lines += [f"# slope {s} = {self.slopes[s]:.4f}" for s in series]
        lines.append("\t".join(["size"] + series))
        for k, size in enumerate(self.sizes):
            lines.append("\t".join([str(size)] + [f"{self.medians[s][k]:.6e}" for s in series]))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["series,size,trial,seconds"]
        lines += [f"{s},{size},{trial},{sec!r}" for s, size, trial, sec in self.samples]
        return "\n".join(lines) + "\n"


def _time_trials(task, trials):
    """Timings of ``run(setup())``; the setup is untimed and the warm-up run is discarded."""
    setup, run = task
    out = []
    for k in range(trials + 1):
        state = setup()
        clock = time.perf_counter()
        run(state)
        if k:
            out.append(time.perf_counter() - clock)
    return out


def _peak_memory(task) -> int:
    setup, run = task
    state = setup()
    tracemalloc.start()
    try:
        run(state)
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def _none():
    return None


def _size_tasks(spec: GeneratorSpec):
    net = generate(spec)
    t = auto_t(net)
    f = exponential_function()
    return {
        "nbt": (_none, lambda _: nbt_katz_temporal(net, t)),
        "f-exp": (_none, lambda _: f_centrality(net, f, t, check=False)),
    }


def _frames_tasks(full: TemporalNetwork, t: float, N: int):
    """Recompute on N frames against appending frame N to cached factors of N - 1 frames.

    The cached solver is re-made with room for one more frame before every
    trial, so the timed append writes into its own storage.
    """
    net = full.subnetwork(1, N)
    prefix = NBTSolver.from_network(full.subnetwork(1, N - 1), t)
    last = frame_adjacency(full, N)
    return {
        "recompute": (_none, lambda _: nbt_katz_temporal(net, t)),
        "update": (lambda: prefix.reserve(1, last.nnz), lambda s: s.append_frame(last).psi_ones()),
    }


def bench_scaling(
    mode: str,
    family: str = "dense",
    trials: int = 3,
    sizes=None,
    N: int = 10,
    n_frames: int = 60,
    seed: int = 0,
    weights: str = "unit",
    measure_memory: bool = True,
    threads: int = 1,
) -> BenchmarkReport:
    """Median wall time against problem size.

    ``mode="size"`` grows n at fixed N and times the nonbacktracking solve and
    the exponential f-centrality.  ``mode="frames"`` grows N at fixed
    ``n = n_frames`` and times a full recompute against one frame-append update
    from the cached factors of the first ``N - 1`` frames.  The compute is
    pinned to ``threads`` BLAS threads (one by default).
    """
    if mode not in ("size", "frames"):
        raise ValidationError(f"unknown benchmark mode {mode!r}")
    if int(trials) < 3:
        raise ValidationError("benchmarks need at least 3 trials")
    sizes = list(sizes or (DEFAULT_SIZES[family] if mode == "size" else DEFAULT_FRAMES))
    if not sizes or min(sizes) < 2:
        raise ValidationError("benchmark sizes must be >= 2")
    config = {
        "mode": mode, "family": family, "trials": int(trials), "N": N, "n": n_frames,
        "seed": seed, "weights": weights, "threads": threads,
    }
    notes = []

    if mode == "frames":
        full = generate(GeneratorSpec(n_frames, max(sizes), family, weights, seed))
        t_frames = auto_t(full)  # admissible for every prefix

    def tasks_for(size):
        if mode == "size":
            return _size_tasks(GeneratorSpec(size, N, family, weights, seed))
        return _frames_tasks(full, t_frames, size)

    medians: dict = {}
    samples, peaks, used = [], {}, []
    with threadpool_limits(limits=threads):
        queue = sorted(sizes)
        while queue:
            size = queue.pop(0)
            tasks = tasks_for(size)
            timings = {name: _time_trials(task, trials) for name, task in tasks.items()}
            fastest = min(statistics.median(v) for v in timings.values())
            if not used and fastest < MIN_MEASURABLE_S and queue and 2 * size < queue[0]:
                msg = f"size {size} runs in {fastest:.2e}s, below timer fidelity; raised to {2 * size}"
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
                notes.append(msg)
                queue.insert(0, 2 * size)
                continue
            used.append(size)
            for name, values in timings.items():
                medians.setdefault(name, []).append(statistics.median(values))
                samples += [(name, size, k, v) for k, v in enumerate(values)]
            if measure_memory:
                peaks[str(size)] = {name: _peak_memory(task) for name, task in tasks.items()}
    slopes = {name: fit_slope(used, values) for name, values in medians.items()}
    return BenchmarkReport(mode, config, used, medians, slopes, samples, peaks, warnings=notes)
