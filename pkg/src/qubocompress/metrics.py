"""Evaluation metrics: induced rankings, Kendall distance, and optimum checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .core import QuboInstance, all_energies, brute_force_minima, diff_stats, energy, energy_tolerance
from .errors import DegenerateError, DimensionError, QuboError

RANKING_LIMIT = 16


@dataclass(frozen=True, eq=False)
class Ranking:
    """Lexicographic codes of all bit vectors in order of nondecreasing energy."""

    permutation: np.ndarray

    def __len__(self):
        return len(self.permutation)

    def __eq__(self, other):
        return isinstance(other, Ranking) and np.array_equal(self.permutation, other.permutation)

    __hash__ = None


def induced_ranking(q: QuboInstance, limit: int = RANKING_LIMIT) -> Ranking:
    """Stable sort of all ``2^n`` vectors by energy (ties keep lexicographic order)."""
    e = all_energies(q, limit)
    return Ranking(np.argsort(e, kind="stable"))


def count_inversions(seq) -> int:
    """Number of pairs ``i < j`` with ``seq[i] > seq[j]`` for distinct values, in O(K log^2 K)."""
    s = np.asarray(seq)
    K = len(s)
    if K < 2:
        return 0
    a = np.argsort(np.argsort(s, kind="stable"), kind="stable").astype(np.int64)
    size = 1 << (K - 1).bit_length()
    a = np.concatenate([a, np.arange(K, size, dtype=np.int64)])
    total = 0
    w = 1
    while w < size:
        blocks = a.reshape(-1, 2 * w)
        left, right = blocks[:, :w], blocks[:, w:]
        pid = np.arange(len(blocks), dtype=np.int64)[:, None] * size
        lk = (left + pid).ravel()
        rk = (right + pid).ravel()
        # left halves are sorted within blocks and offset by block id, so lk is globally sorted
        le = np.searchsorted(lk, rk, side="right") - np.repeat(np.arange(len(blocks)) * w, w)
        total += int((w - le).sum())
        a = np.sort(blocks, axis=1).ravel()
        w *= 2
    return total


def kendall_tau(p, p2) -> float:
    """Normalized Kendall distance: the fraction of discordant index pairs.

    Index pairs ``(i, j)`` are discordant when ``p[i] - p[j]`` and
    ``p2[i] - p2[j]`` have opposite signs. 0 means identical orderings,
    1 means one is the reverse of the other. Accepts :class:`Ranking` objects
    or integer sequences without repeated values.
    """
    a = np.asarray(p.permutation if isinstance(p, Ranking) else p)
    b = np.asarray(p2.permutation if isinstance(p2, Ranking) else p2)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"rankings of different shape {a.shape} and {b.shape}")
    K = len(a)
    if K < 2:
        raise QuboError("Kendall distance needs at least two items")
    order = np.argsort(a, kind="stable")
    return count_inversions(b[order]) / (K * (K - 1) / 2)


def kendall_tau_bruteforce(p, p2) -> float:
    """Quadratic-time reference for :func:`kendall_tau`."""
    a = np.asarray(p.permutation if isinstance(p, Ranking) else p)
    b = np.asarray(p2.permutation if isinstance(p2, Ranking) else p2)
    K = len(a)
    disc = 0
    for i in range(K):
        for j in range(i + 1, K):
            if (a[i] - a[j]) * (b[i] - b[j]) < 0:
                disc += 1
    return disc / (K * (K - 1) / 2)


def weight_permutation(q: QuboInstance) -> np.ndarray:
    """Flat positions ``k * n + l`` sorted by value, ties by (row, column)."""
    n = q.n
    rows, cols = np.divmod(np.arange(n * n), n)
    return np.lexsort((cols, rows, q.matrix.ravel()))


def weight_ordering_distance(q1: QuboInstance, q2: QuboInstance) -> float:
    """Kendall distance between the value orderings of the ``n^2`` entries of two instances."""
    if q1.n != q2.n:
        raise DimensionError(f"n={q1.n} vs n={q2.n}")
    return kendall_tau(weight_permutation(q1), weight_permutation(q2))


def unique_weight_ratio(current: QuboInstance, original: QuboInstance) -> float:
    if current.n != original.n:
        raise DimensionError(f"n={current.n} vs n={original.n}")
    return diff_stats(current).n_distinct / diff_stats(original).n_distinct


def dr_ratio(current: QuboInstance, original: QuboInstance) -> float:
    """Dynamic range of ``current`` relative to ``original``."""
    d0 = diff_stats(original).dr_bits
    if d0 == 0:
        raise DegenerateError("original instance has zero dynamic range")
    return diff_stats(current).dr_bits / d0


def optimum_correctness(rounded: QuboInstance, original: QuboInstance, limit: int | None = None) -> bool:
    """Whether the first minimizer of ``rounded`` is also optimal for ``original``."""
    if rounded.n != original.n:
        raise DimensionError(f"n={rounded.n} vs n={original.n}")
    ref = brute_force_minima(original, limit)
    cand = brute_force_minima(rounded, limit)
    x = cand.minimizers[0]
    return bool(energy(original, x) <= ref.min_value + energy_tolerance(original))


def relative_deviation(v: float, v_star: float) -> float:
    if v_star == 0:
        raise QuboError("relative deviation is undefined for a zero reference energy")
    return abs((v_star - v) / v_star)


def mean_ci(values, confidence: float = 0.95) -> tuple[float, float]:
    """Sample mean and the half-width of its Student-t confidence interval."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        return math.nan, math.nan
    m = float(x.mean())
    if x.size < 2:
        return m, 0.0
    half = float(sps.t.ppf(0.5 + confidence / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))
    return m, half
