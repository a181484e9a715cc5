"""Command line front end: ``tempo --input net.csv --method nbt --out result``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from .bench import bench_scaling
from .centrality import CoefficientFunction, exponential_function, f_centrality, katz_temporal
from .errors import TempoError, ValidationError
from .generate import GeneratorSpec, generate, parse_generator_spec
from .nonbacktracking import auto_t, nbt_katz_incremental, nbt_katz_temporal, static_nbt_katz
from .temporal_graph import TemporalNetwork, frame_adjacency, read_temporal_edgelist
from .walks import recurrence_check

METHODS = ("katz", "f-exp", "f-series", "nbt", "nbt-update", "static-nbt", "oracle-check")

SERIES = {
    "exp": CoefficientFunction("exp", lambda k: 1.0 / math.factorial(k)),
    "cosh": CoefficientFunction("cosh", lambda k: 0.0 if k % 2 else 1.0 / math.factorial(k)),
    "sinh": CoefficientFunction("sinh", lambda k: 1.0 / math.factorial(k) if k % 2 else 0.0),
    "katz": CoefficientFunction("katz", lambda k: 1.0, radius=1.0),
}

ORACLE_TOL = 1e-10


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tempo", description="Walk-based centralities of temporal networks.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="edge list: frame,source,target[,weight] per line")
    src.add_argument("--generate", metavar="SPEC", help='random network, e.g. "sparse:n=500,N=10,seed=7"')
    p.add_argument("--method", choices=METHODS, default="nbt")
    p.add_argument("--t", default="auto", help="attenuation parameter, or 'auto' = 0.5*min(1/rho, t0)")
    p.add_argument("--window", help="frame window first:last (1-based)")
    p.add_argument("--series", choices=sorted(SERIES), default="exp", help="power series used by f-series")
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json (benchmarks add PREFIX.tsv)")
    p.add_argument("--seed", type=int, help="generator seed (overridden by $TEMPO_SEED)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for slice-level loops")
    p.add_argument("--k-max", type=int, default=6, help="walk length bound for oracle-check")
    p.add_argument("--omit-timing", action="store_true", help="leave wall_time_ms out of the JSON report")
    p.add_argument("--bench", choices=("size", "frames"))
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--family", choices=("sparse", "dense"), default="dense")
    p.add_argument("--sizes", help="comma-separated sizes for --bench")
    p.add_argument("--frames-n", type=int, default=60, help="node count for --bench frames")
    return p


def _parse_window(text, N):
    if text is None:
        return 1, N
    first, sep, last = text.partition(":")
    try:
        window = (int(first), int(last) if sep else int(first))
    except ValueError:
        raise ValidationError(f"window {text!r} is not first:last") from None
    if not 1 <= window[0] <= window[1] <= N:
        raise ValidationError(f"window {text} outside 1..{N}")
    return window


def _load(args):
    if args.input:
        return read_temporal_edgelist(args.input), {"input": str(args.input)}
    if not args.generate:
        raise ValidationError("one of --input or --generate is required")
    spec = parse_generator_spec(args.generate)
    if args.seed is not None:
        spec = GeneratorSpec(**{**spec.to_dict(), "seed": args.seed})
    spec = spec.with_env_seed()
    return generate(spec), {"generator": spec.to_dict()}


def _parse_t(text, net):
    if text == "auto":
        return auto_t(net)
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"--t must be a number or 'auto', got {text!r}") from None


def _write(prefix, suffix, text):
    Path(f"{prefix}{suffix}").write_text(text, encoding="utf-8")


def _run_method(args, net, provenance):
    first, last = _parse_window(args.window, net.N)
    if args.method == "oracle-check":
        report = recurrence_check(net.subnetwork(first, last), k_max=args.k_max)
        payload = report.to_dict(include_runtime=not args.omit_timing)
        payload.update({"method": "oracle-check", "window": [first, last], "passed": report.worst <= ORACLE_TOL})
        payload.update(provenance)
        text = json.dumps(payload, indent=2, sort_keys=True)
        if args.out:
            _write(args.out, ".json", text + "\n")
        print(text)
        return 0 if payload["passed"] else 1

    if args.method == "static-nbt":
        if first != last:
            raise ValidationError("static-nbt works on one frame; pass --window k:k")
        A = frame_adjacency(net, first)
        t = auto_t(TemporalNetwork.from_matrices([A])) if args.t == "auto" else _parse_t(args.t, net)
        report = static_nbt_katz(A, t)
        report.window = (first, last)
    else:
        sub = net.subnetwork(1, last) if last < net.N else net
        t = _parse_t(args.t, sub)
        if args.method == "katz":
            report = katz_temporal(net, t, first, last)
        elif args.method == "f-exp":
            report = f_centrality(net, exponential_function(), t, (first, last))
        elif args.method == "f-series":
            report = f_centrality(net, SERIES[args.series], t, (first, last))
        elif args.method == "nbt":
            report = nbt_katz_temporal(sub, t, first, threads=args.threads)
        else:
            report = nbt_katz_incremental(sub, t, first)
    report.meta.update(provenance)
    text = report.to_json(include_timing=not args.omit_timing)
    if args.out:
        _write(args.out, ".csv", report.to_csv())
        _write(args.out, ".json", text + "\n")
        print(text)
    else:
        sys.stdout.write(report.to_csv())
    return 0


def _run_bench(args):
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    seed = args.seed if args.seed is not None else 0
    seed = GeneratorSpec(2, seed=seed).with_env_seed().seed
    report = bench_scaling(
        args.bench, family=args.family, trials=args.trials, sizes=sizes, n_frames=args.frames_n, seed=seed
    )
    if args.out:
        _write(args.out, ".tsv", report.to_tsv())
        _write(args.out, ".csv", report.to_csv())
        _write(args.out, ".json", report.to_json() + "\n")
    print(report.to_json())
    return 0


def _fail(code, message, status):
    print(json.dumps({"code": code, "message": message}), file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # BLAS stays single-threaded so scores do not depend on the thread count
        with threadpool_limits(limits=1):
            if args.bench:
                return _run_bench(args)
            net, provenance = _load(args)
            return _run_method(args, net, provenance)
    except FileNotFoundError as exc:
        return _fail("IO", f"cannot read {exc.filename}", 2)
    except OSError as exc:
        return _fail("IO", str(exc), 2)
    except TempoError as exc:
        return _fail(exc.code, str(exc), 1)
    except IndexError as exc:
        return _fail("INDEX", str(exc), 1)


if __name__ == "__main__":
    raise SystemExit(main())
