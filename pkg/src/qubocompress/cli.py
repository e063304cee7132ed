"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 enumeration
limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as qio
from .bounds import BoundMethod
from .compress import CompressionConfig, Heuristic, Selection, compress
from .core import brute_force_minima, diff_stats, spectral_gap
from .errors import EnumerationLimitError, QuboError
from .experiments import (
    CompressExperimentConfig,
    NoiseConfig,
    RoundingConfig,
    run_compress_experiment,
    run_noise,
    run_rounding,
    with_overrides,
)
from .generators import gen_binclustering, gen_subsetsum, gen_uniform, subsetsum_to_qubo
from .metrics import (
    dr_ratio,
    induced_ranking,
    kendall_tau,
    optimum_correctness,
    unique_weight_ratio,
    weight_ordering_distance,
)
from .solvers import AnnealSchedule, simulated_annealing

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _positions(text: str | None):
    if not text:
        return None
    try:
        return tuple(tuple(int(v) for v in p.split(",")) for p in text.split(";") if p.strip())
    except ValueError:
        raise UsageError(f"bad --positions {text!r}; expected 'k,l;k,l'") from None


def cmd_info(args):
    q = qio.read_qubo(args.file)
    st = diff_stats(q)
    _emit(_json({"n": q.n, "min_diff": st.min_diff, "max_diff": st.max_diff, "dr_bits": st.dr_bits,
                 "distinct_values": st.n_distinct, "degenerate": st.degenerate}), args.out)


def cmd_solve(args):
    q = qio.read_qubo(args.file)
    if args.method == "exhaustive":
        r = brute_force_minima(q, args.limit)
        _emit(_json({"n": q.n, "min_value": r.min_value,
                     "minimizers": ["".join(map(str, x)) for x in r.minimizers]}), args.out)
        return
    sched = AnnealSchedule.for_instance(q, sweeps=args.sweeps, reads=args.reads)
    s = simulated_annealing(q, sched, seed=args.seed)
    if args.format == "csv":
        _emit(s.to_csv(), args.out)
    else:
        _emit(_json({"n": q.n, "best_energy": float(s.energies[0]),
                     "best": "".join(map(str, s.samples[0])), "reads": len(s)}), args.out)


def cmd_compress(args):
    if args.iterations < 1:
        raise UsageError("--iterations must be at least 1")
    q = qio.read_qubo(args.file)
    cfg = CompressionConfig(heuristic=args.heuristic, selection=args.selection,
                            max_iterations=args.iterations, bound_method=args.bounds,
                            rng_seed=args.seed, positions=_positions(args.positions))
    qc, trace = compress(q, cfg)
    if args.out:
        qio.write_qubo(qc, args.out)
    if args.trace:
        text = trace.to_csv() if args.format == "csv" else trace.to_jsonl()
        Path(args.trace).write_text(text)
    summ = trace.summary()
    summ["skipped"] = summ["iterations"] - summ["applied"]
    sys.stdout.write(_json(summ))
    if not args.out:
        sys.stdout.write(qio.dumps_text(qc))


def cmd_spectral_gap(args):
    r = spectral_gap(qio.read_qubo(args.file), args.limit)
    _emit(_json({"y1": r.y1, "y2": r.y2, "gamma": r.gamma, "alpha_star": r.alpha_star}), args.out)


def cmd_gen(args):
    if args.family == "uniform":
        q = gen_uniform(args.n, args.seed)
    elif args.family == "subsetsum":
        p = gen_subsetsum(args.n, args.seed)
        q = subsetsum_to_qubo(p)
        if args.problem:
            Path(args.problem).write_text(p.to_json() + "\n")
    else:
        ds, q = gen_binclustering(args.seed, outliers=not args.no_outliers)
        if args.dataset:
            Path(args.dataset).write_text(ds.to_csv())
    if args.out:
        qio.write_qubo(q, args.out)
    elif args.format == "json":
        sys.stdout.write(qio.dumps_json(q) + "\n")
    else:
        sys.stdout.write(qio.dumps_text(q))


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        obj = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise QuboError(f"config {args.config}: {exc}") from None
    if not isinstance(obj, dict):
        raise QuboError("config file must hold a JSON object")
    return obj


def _merge(base, cfg: dict, flags: dict):
    """Config-file values first, then explicitly given flags."""
    known = set(base.__dataclass_fields__)
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    tuples = {k for k, f in base.__dataclass_fields__.items() if str(f.type).startswith("tuple")}
    merged = {**cfg, **{k: v for k, v in flags.items() if v is not None}}
    merged = {k: tuple(v) if k in tuples else v for k, v in merged.items()}
    return with_overrides(base, **merged)


def _split(text):
    return None if text is None else tuple(t for t in text.split(",") if t)


def cmd_exp(args):
    cfg = _load_config(args)
    if args.kind == "rounding":
        conf = _merge(RoundingConfig(), cfg, {"n": args.n, "instances": args.instances, "bins": args.bins,
                                               "min_bits": args.min_bits, "max_bits": args.max_bits,
                                               "seed": args.seed})
        res = run_rounding(conf, jobs=args.jobs)
        _emit(res.to_csv(), args.out)
    elif args.kind == "compress":
        sizes = None if args.sizes is None else tuple(int(s) for s in _split(args.sizes))
        conf = _merge(CompressExperimentConfig(), cfg, {
            "sizes": sizes, "instances": args.instances, "iterations": args.iterations,
            "heuristics": _split(args.heuristics), "selections": _split(args.selections),
            "bound_method": args.bounds, "ranking_every": args.ranking_every, "seed": args.seed})
        _emit(run_compress_experiment(conf, jobs=args.jobs), args.out)
    else:
        conf = _merge(NoiseConfig(), cfg, {
            "family": args.family, "n": args.n, "sigma": args.sigma, "reads": args.reads,
            "sweeps": args.sweeps, "iterations": args.iterations, "heuristic": args.heuristic,
            "bound_method": args.bounds, "seed": args.seed, "noise_seed": args.noise_seed})
        res = run_noise(conf)
        _emit(res.to_csv(), args.out)
        sys.stderr.write(_json({"v_star": res.v_star, "optimal_original": res.optimal_count("original"),
                                "optimal_compressed": res.optimal_count("compressed"),
                                "prevalence_ratio": res.prevalence_ratio}))


def cmd_metrics(args):
    a, b = qio.read_qubo(args.current), qio.read_qubo(args.original)
    out = {"dr_current": diff_stats(a).dr_bits, "dr_original": diff_stats(b).dr_bits,
           "dr_ratio": dr_ratio(a, b), "weight_ordering_distance": weight_ordering_distance(a, b),
           "unique_weight_ratio": unique_weight_ratio(a, b)}
    if a.n <= 16:
        out["ranking_distance"] = kendall_tau(induced_ranking(b), induced_ranking(a))
        out["optimum_correctness"] = optimum_correctness(a, b)
    _emit(_json(out), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--config", default=None, help="JSON file with option values; flags win")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for experiments")

    p = _Parser(prog="qubocompress", description="QUBO dynamic-range compression toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("info", parents=[common], help="value statistics and dynamic range")
    s.add_argument("file")
    s.set_defaults(func=cmd_info)

    s = sub.add_parser("solve", parents=[common], help="exhaustive or annealing minimization")
    s.add_argument("file")
    s.add_argument("--method", choices=["exhaustive", "sa"], default="exhaustive")
    s.add_argument("--reads", type=int, default=100)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--limit", type=int, default=None, help="enumeration size limit")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("compress", parents=[common], help="reduce the dynamic range")
    s.add_argument("file")
    s.add_argument("-H", "--heuristic", choices=[h.value for h in Heuristic], default="M")
    s.add_argument("-S", "--selection", choices=[x.value for x in Selection], default="greedy")
    s.add_argument("-i", "--iterations", type=int, default=1000)
    s.add_argument("-b", "--bounds", choices=[b.value for b in BoundMethod], default="auto")
    s.add_argument("--positions", default=None, help="restrict candidates, e.g. '1,2;0,0'")
    s.add_argument("--trace", default=None, help="write the per-iteration trace here")
    s.set_defaults(func=cmd_compress)

    s = sub.add_parser("spectral-gap", parents=[common], help="energy gap and safe rounding scale")
    s.add_argument("file")
    s.add_argument("--limit", type=int, default=None)
    s.set_defaults(func=cmd_spectral_gap)

    s = sub.add_parser("gen", parents=[common], help="generate an instance")
    s.add_argument("family", choices=["subsetsum", "binclust", "uniform"])
    s.add_argument("-n", type=int, default=14)
    s.add_argument("--problem", default=None, help="SubsetSum problem JSON output")
    s.add_argument("--dataset", default=None, help="clustering dataset CSV output")
    s.add_argument("--no-outliers", action="store_true")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("exp", parents=[common], help="run an experiment pipeline")
    s.add_argument("kind", choices=["rounding", "compress", "noise"])
    s.add_argument("-n", type=int, default=None)
    s.add_argument("--sizes", default=None, help="comma-separated n values (compress)")
    s.add_argument("--instances", type=int, default=None)
    s.add_argument("--bins", type=int, default=None)
    s.add_argument("--min-bits", type=int, default=None)
    s.add_argument("--max-bits", type=int, default=None)
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--heuristics", default=None, help="comma-separated, e.g. G,G0,M")
    s.add_argument("--heuristic", default=None)
    s.add_argument("--selections", default=None, help="comma-separated, e.g. random,greedy")
    s.add_argument("--bounds", default=None)
    s.add_argument("--ranking-every", type=int, default=None)
    s.add_argument("--family", default=None)
    s.add_argument("--sigma", type=float, default=None)
    s.add_argument("--reads", type=int, default=None)
    s.add_argument("--sweeps", type=int, default=None)
    s.add_argument("--noise-seed", type=int, default=None)
    s.set_defaults(func=cmd_exp)

    s = sub.add_parser("metrics", parents=[common], help="compare a compressed instance to its original")
    s.add_argument("current")
    s.add_argument("original")
    s.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "exp" and args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except EnumerationLimitError as exc:
        sys.stderr.write(f"limit exceeded: {exc}\n")
        return EXIT_LIMIT
    except (QuboError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
