"""Experiment pipelines: rounding robustness, compression trajectories, noisy sampling.

Every pipeline derives per-instance seeds as ``seed + index`` so results do
not depend on whether instances run sequentially or in a process pool.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import BoundMethod
from .compress import CompressionConfig, Heuristic, Selection, compress
from .core import (
    QuboInstance,
    all_energies,
    brute_force_minima,
    diff_stats,
    energies,
    energy_tolerance,
    round_entries,
    scale,
)
from .errors import DegenerateError, QuboError
from .generators import gen_binclustering, gen_subsetsum, gen_uniform, subsetsum_to_qubo
from .metrics import (
    induced_ranking,
    kendall_tau,
    mean_ci,
    relative_deviation,
    unique_weight_ratio,
    weight_ordering_distance,
)
from .solvers import AnnealSchedule, SampleSet, ice_perturb, simulated_annealing

CSV_VERSION = "1"


def _map(fn, items, jobs: int = 1):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return x


# rounding robustness ---------------------------------------------------------

@dataclass(frozen=True)
class RoundingConfig:
    n: int = 10
    instances: int = 2000
    bins: int = 5
    min_bits: int = 1
    max_bits: int = 14
    seed: int = 0

    def __post_init__(self):
        if self.instances < self.bins or self.bins < 1:
            raise QuboError("need at least one instance per bin")
        if not 1 <= self.min_bits <= self.max_bits:
            raise QuboError("need 1 <= min_bits <= max_bits")


def round_to_bits(q: QuboInstance, bits: int) -> QuboInstance:
    """Scale so the largest magnitude fills the signed ``bits``-bit range, then round."""
    top = float(np.abs(q.matrix).max())
    alpha = (2 ** (bits - 1) - 1) / top if top > 0 else 0.0
    if alpha == 0:
        return QuboInstance.zeros(q.n)
    return round_entries(scale(q, alpha))


def _rounding_instance(args):
    n, seed, bits = args
    q = subsetsum_to_qubo(gen_subsetsum(n, seed))
    E = all_energies(q)
    v_star = float(E.min())
    tol = energy_tolerance(q)
    ok = []
    for b in bits:
        r = round_to_bits(q, b)
        x = brute_force_minima(r).minimizers[0]
        ok.append(bool(energies(q, x[None, :])[0] <= v_star + tol))
    return diff_stats(q).dr_bits, ok


@dataclass(frozen=True)
class RoundingResult:
    config: RoundingConfig
    dr: np.ndarray
    bin_of: np.ndarray
    edges: np.ndarray
    correct: np.ndarray  # instances x bit widths

    @property
    def bits(self) -> list[int]:
        return list(range(self.config.min_bits, self.config.max_bits + 1))

    def proportions(self) -> np.ndarray:
        """Fraction of correct instances, shape (bins, bit widths)."""
        out = np.zeros((self.config.bins, len(self.bits)))
        for b in range(self.config.bins):
            out[b] = self.correct[self.bin_of == b].mean(axis=0)
        return out

    def counts(self) -> np.ndarray:
        return np.bincount(self.bin_of, minlength=self.config.bins)

    def to_csv(self) -> str:
        props, counts = self.proportions(), self.counts()
        rows = []
        for b in range(self.config.bins):
            for j, bits in enumerate(self.bits):
                rows.append([CSV_VERSION, b + 1, repr(float(self.edges[b])), repr(float(self.edges[b + 1])),
                             bits, int(counts[b]), int(self.correct[self.bin_of == b, j].sum()),
                             repr(float(props[b, j]))])
        return _csv(["version", "bin", "dr_lo", "dr_hi", "bits", "count", "correct", "proportion"], rows)


def assign_quantile_bins(values, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Bin index per value using the i/bins quantiles; bins are half-open, the last one closed."""
    v = np.asarray(values, dtype=np.float64)
    edges = np.quantile(v, np.linspace(0, 1, bins + 1))
    idx = np.searchsorted(edges, v, side="right") - 1
    return np.clip(idx, 0, bins - 1), edges


def run_rounding(config: RoundingConfig, jobs: int = 1) -> RoundingResult:
    bits = list(range(config.min_bits, config.max_bits + 1))
    res = _map(_rounding_instance, [(config.n, config.seed + i, bits) for i in range(config.instances)], jobs)
    dr = np.array([r[0] for r in res])
    correct = np.array([r[1] for r in res], dtype=bool)
    bin_of, edges = assign_quantile_bins(dr, config.bins)
    if np.any(np.bincount(bin_of, minlength=config.bins) == 0):
        raise DegenerateError("some DR bin is empty; use more instances or fewer bins")
    return RoundingResult(config, dr, bin_of, edges, correct)


# compression trajectories ----------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Per-iteration metrics of one compression run; index 0 is the original instance."""

    dr_ratio: np.ndarray
    weight_distance: np.ndarray
    unique_ratio: np.ndarray
    ranking_distance: np.ndarray  # NaN where not evaluated


def compression_trajectory(q: QuboInstance, config: CompressionConfig, ranking_every: int = 0) -> Trajectory:
    """Compress ``q`` and evaluate the metrics after every iteration.

    The ranking distance needs ``2^n`` energies, so it is computed only every
    ``ranking_every`` iterations (and at the end); 0 disables it.
    """
    _, trace = compress(q, config)
    d0 = diff_stats(q).dr_bits
    cur = q
    T = trace.iterations
    dr = np.empty(T + 1)
    wd = np.empty(T + 1)
    ur = np.empty(T + 1)
    rk = np.full(T + 1, np.nan)
    base = induced_ranking(q) if ranking_every else None
    for t in range(T + 1):
        if t > 0:
            r = trace.records[t - 1]
            if not r.skipped:
                cur = cur.add(r.k, r.l, r.w_applied)
        dr[t] = (trace.records[t - 1].dr_after if t else d0) / d0
        wd[t] = weight_ordering_distance(q, cur)
        ur[t] = unique_weight_ratio(cur, q)
        if ranking_every and (t % ranking_every == 0 or t == T):
            rk[t] = kendall_tau(base, induced_ranking(cur))
    return Trajectory(dr, wd, ur, rk)


@dataclass(frozen=True)
class CompressExperimentConfig:
    sizes: tuple[int, ...] = (8,)
    instances: int = 20
    iterations: int = 100
    heuristics: tuple[str, ...] = ("G", "G0", "M")
    selections: tuple[str, ...] = ("random", "greedy")
    bound_method: str = "auto"
    ranking_every: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.instances < 1 or self.iterations < 1:
            raise QuboError("instances and iterations must be at least 1")
        for h in self.heuristics:
            Heuristic(h)
        for s in self.selections:
            Selection(s)


def _trajectory_job(args):
    n, seed, cfg, every = args
    return compression_trajectory(gen_uniform(n, seed), cfg, every)


def run_compress_experiment(config: CompressExperimentConfig, jobs: int = 1) -> str:
    """Mean and 95% CI of every metric per (n, heuristic, selection, iteration), as CSV."""
    rows = []
    for n in config.sizes:
        every = config.ranking_every if n <= 16 else 0
        for h in config.heuristics:
            for s in config.selections:
                items = []
                for i in range(config.instances):
                    cfg = CompressionConfig(heuristic=h, selection=s, max_iterations=config.iterations,
                                            bound_method=config.bound_method, rng_seed=config.seed + i)
                    items.append((n, config.seed + i, cfg, every))
                trajs = _map(_trajectory_job, items, jobs)
                for t in range(config.iterations + 1):
                    row = [CSV_VERSION, n, h, s, t]
                    for name in ("dr_ratio", "ranking_distance", "weight_distance", "unique_ratio"):
                        vals = np.array([getattr(tr, name)[t] for tr in trajs])
                        vals = vals[~np.isnan(vals)]
                        m, half = mean_ci(vals) if vals.size else (math.nan, math.nan)
                        row += [_fmt(m), _fmt(half)]
                    rows.append(row)
    header = ["version", "n", "heuristic", "selection", "iter"]
    for name in ("dr_ratio", "ranking_distance", "weight_distance", "unique_ratio"):
        header += [f"{name}_mean", f"{name}_ci95"]
    return _csv(header, rows)


# noisy sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class NoiseConfig:
    family: str = "subsetsum"
    n: int = 14
    sigma: float = 0.02
    reads: int = 500
    sweeps: int = 1000
    iterations: int = 150
    heuristic: str = "G0"
    selection: str = "greedy"
    bound_method: str = "roofdual"
    seed: int = 0
    noise_seed: int = 0

    def __post_init__(self):
        if self.family not in ("subsetsum", "binclust", "uniform"):
            raise QuboError(f"unknown problem family {self.family!r}")
        if self.sigma < 0:
            raise QuboError("sigma must be nonnegative")


def make_instance(family: str, n: int, seed: int) -> QuboInstance:
    if family == "subsetsum":
        return subsetsum_to_qubo(gen_subsetsum(n, seed))
    if family == "binclust":
        return gen_binclustering(seed)[1]
    return gen_uniform(n, seed)


def compress_for_noise(config: NoiseConfig) -> tuple[QuboInstance, QuboInstance]:
    q = make_instance(config.family, config.n, config.seed)
    cfg = CompressionConfig(heuristic=config.heuristic, selection=config.selection,
                            max_iterations=config.iterations, bound_method=config.bound_method,
                            rng_seed=config.seed)
    qc, _ = compress(q, cfg)
    return q, qc


@dataclass(frozen=True, eq=False)
class NoiseResult:
    v_star: float
    original: SampleSet  # states from the perturbed original, energies under the clean original
    compressed: SampleSet  # states from the perturbed compressed instance, same energies
    tol: float = field(default=0.0)

    def optimal_count(self, which: str) -> int:
        s = self.original if which == "original" else self.compressed
        return int(np.sum(s.energies <= self.v_star + self.tol))

    @property
    def prevalence_ratio(self) -> float:
        a, b = self.optimal_count("original"), self.optimal_count("compressed")
        return b / a if a else (math.inf if b else math.nan)

    def to_csv(self) -> str:
        rows = []
        for name, s in (("original", self.original), ("compressed", self.compressed)):
            for rank, (x, e) in enumerate(zip(s.samples, s.energies)):
                rows.append([CSV_VERSION, name, rank, repr(float(e)),
                             repr(relative_deviation(float(e), self.v_star)), "".join(map(str, x))])
        return _csv(["version", "instance", "rank", "energy", "relative_deviation", "bitstring"], rows)


def noisy_sampling(q: QuboInstance, qc: QuboInstance, sigma: float, reads: int, sweeps: int,
                   noise_seed: int) -> NoiseResult:
    """Anneal noise-perturbed copies of both instances and score samples on the clean original."""
    v_star = brute_force_minima(q).min_value
    out = []
    for inst in (q, qc):
        noisy = ice_perturb(inst, sigma, seed=noise_seed)
        sched = AnnealSchedule.for_instance(noisy, sweeps=sweeps, reads=reads)
        out.append(simulated_annealing(noisy, sched, seed=noise_seed).rescored(q))
    return NoiseResult(v_star, out[0], out[1], energy_tolerance(q))


def run_noise(config: NoiseConfig) -> NoiseResult:
    q, qc = compress_for_noise(config)
    return noisy_sampling(q, qc, config.sigma, config.reads, config.sweeps, config.noise_seed)


def with_overrides(cfg, **kw):
    """Copy of a config dataclass with the non-None keyword overrides applied."""
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


__all__ = [
    "CompressExperimentConfig",
    "NoiseConfig",
    "NoiseResult",
    "RoundingConfig",
    "RoundingResult",
    "Trajectory",
    "assign_quantile_bins",
    "compress_for_noise",
    "compression_trajectory",
    "make_instance",
    "noisy_sampling",
    "round_to_bits",
    "run_compress_experiment",
    "run_noise",
    "run_rounding",
    "with_overrides",
]
