"""Heuristic solvers and a hardware-noise stand-in.

Local search and simulated annealing work on batches of states at once;
the flip cost of variable i in state x is ``(1 - 2 x_i) * (Q_ii + sum_j A_ij x_j)``
with ``A = Q + Q^T`` minus its diagonal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import QuboInstance, diff_stats, energies, energy_tolerance
from .errors import DimensionError, QuboError


def _coupling(q: QuboInstance) -> tuple[np.ndarray, np.ndarray]:
    Q = q.matrix
    A = Q + Q.T
    np.fill_diagonal(A, 0.0)
    return np.diag(Q).copy(), A


def local_search_batch(q: QuboInstance, starts, fixed: Sequence[int] = ()) -> np.ndarray:
    """Best-improvement single-flip descent from every row of ``starts``.

    Variables listed in ``fixed`` are never flipped. Each step flips the free
    variable with the most negative flip cost (lowest index on ties); a row
    stops once no flip lowers its energy by more than the instance's
    floating-point tolerance.
    """
    X = np.array(np.atleast_2d(starts), dtype=np.float64)
    if X.shape[1] != q.n:
        raise DimensionError(f"start vectors have length {X.shape[1]}, expected {q.n}")
    lin, A = _coupling(q)
    free = np.ones(q.n, dtype=bool)
    free[list(fixed)] = False
    if not free.any():
        return X.astype(np.uint8)
    tol = energy_tolerance(q)
    field = lin + X @ A
    active = np.ones(len(X), dtype=bool)
    rows = np.arange(len(X))
    while active.any():
        r = rows[active]
        delta = (1.0 - 2.0 * X[r]) * field[r]
        delta[:, ~free] = np.inf
        best = np.argmin(delta, axis=1)
        improving = delta[np.arange(len(r)), best] < -tol
        active[r[~improving]] = False
        r, best = r[improving], best[improving]
        if len(r) == 0:
            break
        step = 1.0 - 2.0 * X[r, best]
        X[r, best] += step
        field[r] += step[:, None] * A[best]
    return X.astype(np.uint8)


def local_search(q: QuboInstance, start, fixed: Sequence[int] = ()) -> np.ndarray:
    """Descend from a single start vector; see :func:`local_search_batch`."""
    return local_search_batch(q, np.asarray(start)[None, :], fixed)[0]


@dataclass(frozen=True)
class AnnealSchedule:
    initial_temperature: float
    final_temperature: float
    sweeps: int = 1000
    reads: int = 100

    def __post_init__(self):
        if not (self.initial_temperature >= self.final_temperature > 0):
            raise QuboError("need initial_temperature >= final_temperature > 0")
        if self.sweeps < 1 or self.reads < 1:
            raise QuboError("sweeps and reads must be at least 1")

    @classmethod
    def for_instance(cls, q: QuboInstance, sweeps: int = 1000, reads: int = 100) -> "AnnealSchedule":
        """Temperatures scaled to the instance: from maxD down to minD / 10."""
        st = diff_stats(q)
        if st.degenerate:
            return cls(1.0, 1.0, sweeps, reads)
        return cls(st.max_diff, st.min_diff / 10.0, sweeps, reads)

    def temperatures(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.final_temperature])
        return np.geomspace(self.initial_temperature, self.final_temperature, self.sweeps)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Final states of independent reads, sorted by ascending energy."""

    samples: np.ndarray
    energies: np.ndarray

    def __len__(self):
        return len(self.energies)

    @classmethod
    def from_states(cls, q: QuboInstance, states) -> "SampleSet":
        states = np.asarray(states, dtype=np.uint8)
        e = energies(q, states)
        order = np.argsort(e, kind="stable")
        return cls(states[order], e[order])

    def rescored(self, q: QuboInstance) -> "SampleSet":
        """The same states evaluated (and re-sorted) under another instance."""
        return SampleSet.from_states(q, self.samples)

    def to_csv(self, v_star: float | None = None) -> str:
        from .metrics import relative_deviation

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "energy", "relative_deviation", "bitstring"])
        for rank, (x, e) in enumerate(zip(self.samples, self.energies)):
            dev = "" if v_star is None else repr(relative_deviation(float(e), v_star))
            w.writerow([rank, repr(float(e)), dev, "".join(map(str, x))])
        return buf.getvalue()


def _read_uniforms(rngs, n_sweeps: int, n: int) -> np.ndarray:
    return np.stack([g.random((n_sweeps, n)) for g in rngs])


def simulated_annealing(q: QuboInstance, schedule: AnnealSchedule | None = None, seed: int = 0,
                        block_sweeps: int = 100) -> SampleSet:
    """Metropolis annealing with a geometric temperature schedule.

    Each read is an independent chain with its own random stream derived from
    ``(seed, read_index)``; chains are advanced together in a vectorized loop,
    so the result does not depend on how reads are batched.
    """
    schedule = schedule or AnnealSchedule.for_instance(q)
    n, R = q.n, schedule.reads
    lin, A = _coupling(q)
    rngs = [np.random.default_rng([seed, r]) for r in range(R)]
    X = np.stack([g.integers(0, 2, n) for g in rngs]).astype(np.float64)
    field = lin + X @ A
    temps = schedule.temperatures()
    for b0 in range(0, len(temps), block_sweeps):
        tb = temps[b0:b0 + block_sweeps]
        U = _read_uniforms(rngs, len(tb), n)
        for s, T in enumerate(tb):
            for i in range(n):
                delta = (1.0 - 2.0 * X[:, i]) * field[:, i]
                accept = (delta <= 0) | (U[:, s, i] < np.exp(-np.maximum(delta, 0.0) / T))
                if not accept.any():
                    continue
                step = np.where(accept, 1.0 - 2.0 * X[:, i], 0.0)
                X[:, i] += step
                field += step[:, None] * A[i]
    return SampleSet.from_states(q, X)


def ice_perturb(q: QuboInstance, sigma: float, seed: int = 0, include_zeros: bool = False) -> QuboInstance:
    """Add Gaussian noise of std ``sigma * maxD(q)`` to the upper-triangle couplers.

    Only nonzero entries are treated as couplers unless ``include_zeros``.
    """
    if sigma < 0:
        raise QuboError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return q
    st = diff_stats(q)
    scale = st.max_diff if not st.degenerate else 0.0
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma * scale, size=q.matrix.shape)
    mask = np.triu(np.ones_like(q.matrix, dtype=bool))
    if not include_zeros:
        mask &= q.matrix != 0
    return QuboInstance(q.matrix + np.where(mask, noise, 0.0))


def best_energy(samples: SampleSet) -> float:
    return float(samples.energies[0]) if len(samples) else math.nan
