"""Dynamic-range reduction by sequential optimum-preserving parameter updates.

Each iteration picks one upper-triangle position (k, l), proposes a change
``w`` that should shrink the dynamic range, clamps it to the interval in which
at least one optimum survives, and applies it only if the result does not
increase the dynamic range.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import BoundMethod, PinnedPair, PreservationInterval, preservation_interval, subspace_bounds
from .core import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    DiffStats,
    EntryOrdering,
    QuboInstance,
    all_energies,
    diff_stats,
    energy_tolerance,
    entry_ordering,
    upper_positions,
    value_stats,
)
from .errors import DegenerateError, QuboError

DR_TOLERANCE = 1e-9


class Heuristic(str, enum.Enum):
    G = "G"
    G0 = "G0"
    M = "M"


class Selection(str, enum.Enum):
    RANDOM = "random"
    SEQUENTIAL = "sequential"
    GREEDY = "greedy"


def _close(a: float, b: float, rtol: float = DEFAULT_RTOL) -> bool:
    return abs(a - b) <= max(DEFAULT_ATOL, rtol * max(abs(a), abs(b)))


def _min_diff_without(ordering: EntryOrdering, rank: int, rtol: float) -> float:
    st = value_stats(ordering.others(rank), rtol)
    return math.inf if st.degenerate else st.min_diff


@dataclass(frozen=True)
class DrChangeBounds:
    """Range of changes to one entry under which the dynamic range cannot grow.

    Necessary, not sufficient: a target must also keep distance ``minD`` from
    every other value or land on one of them (see :func:`admissible`).
    """

    d_minus: float
    d_plus: float
    delta_ell: float
    landing_targets: tuple[float, ...]

    @property
    def reach_plus(self) -> float:
        """``d_plus`` without the overshoot slack."""
        return self.d_plus - self.delta_ell

    @property
    def reach_minus(self) -> float:
        return self.d_minus + self.delta_ell


def dr_change_bounds(ordering: EntryOrdering, stats: DiffStats, rank: int,
                     rtol: float = DEFAULT_RTOL) -> DrChangeBounds:
    """Bounds ``[d-, d+]`` on the change of the entry at ``rank`` (0-based).

    ``d- = q_1 - q_l + [l = m](q_{m-1} - q_m) - D`` and
    ``d+ = q_m - q_l + [l = 1](q_2 - q_1) + D`` with
    ``D = maxD * (minD(others) / minD - 1)``, where "others" drops position l.
    If the others hold a single distinct value, ``D`` is taken as 0.
    """
    if stats.degenerate:
        raise DegenerateError("dynamic-range bounds need at least two distinct values")
    if not ordering.is_modifiable(rank):
        raise QuboError(f"position {ordering.position(rank)} is a structural lower-triangle zero")
    v = ordering.values
    m = ordering.m
    ql = float(v[rank])
    md_others = _min_diff_without(ordering, rank, rtol)
    delta = 0.0 if math.isinf(md_others) else stats.max_diff * (md_others / stats.min_diff - 1.0)
    delta = max(delta, 0.0)
    d_minus = float(v[0]) - ql - delta
    d_plus = float(v[-1]) - ql + delta
    if rank == m - 1:
        d_minus += float(v[m - 2] - v[m - 1])
    if rank == 0:
        d_plus += float(v[1] - v[0])
    others = value_stats(ordering.others(rank), rtol).distinct_values
    lo, hi = ql + d_minus, ql + d_plus
    landing = tuple(float(x) for x in others if lo <= x <= hi)
    return DrChangeBounds(d_minus, d_plus, delta, landing)


def admissible(ordering: EntryOrdering, stats: DiffStats, rank: int, w: float,
               rtol: float = DEFAULT_RTOL) -> bool:
    """Whether moving entry ``rank`` by ``w`` keeps distance ``minD`` from all others or lands on one."""
    target = float(ordering.values[rank]) + w
    others = ordering.others(rank)
    if _close(target, float(ordering.values[rank]), rtol):
        return True
    if any(_close(target, float(x), rtol) for x in others):
        return True
    slack = max(DEFAULT_ATOL, rtol * stats.min_diff)
    return bool(np.all(np.abs(target - others) >= stats.min_diff - slack))


def _backoff(ordering: EntryOrdering, stats: DiffStats, rank: int, target: float, sign: int,
             rtol: float) -> float | None:
    """Nearest point from ``target`` back toward q_l that keeps distance minD from all others.

    Returns None when no such point lies strictly beyond q_l in direction ``sign``.
    """
    ql = float(ordering.values[rank])
    others = ordering.others(rank)
    md = stats.min_diff
    slack = max(DEFAULT_ATOL, rtol * md)
    t = target
    while sign * (t - ql) > 0:
        inside = others[np.abs(t - others) < md - slack]
        if inside.size == 0:
            return t
        # step to the edge of the forbidden zone facing q_l
        t = float(inside.min() - md) if sign > 0 else float(inside.max() + md)
    return None


def heuristic_g(ordering: EntryOrdering, stats: DiffStats, rank: int, bounds: DrChangeBounds,
                rtol: float = DEFAULT_RTOL) -> float:
    """Largest change in the sign-driven direction.

    Negative entries are increased, all others decreased. The entry is pushed
    as far as the dynamic-range bounds allow while keeping distance ``minD``
    from every other value; if no such point exists it lands on the farthest
    existing value within reach.
    """
    ql = float(ordering.values[rank])
    sign = 1 if ql < 0 else -1
    reach = bounds.reach_plus if sign > 0 else bounds.reach_minus
    if reach == 0:
        return 0.0
    t = _backoff(ordering, stats, rank, ql + reach, sign, rtol)
    if t is not None:
        return t - ql
    end = ql + reach
    cands = [x for x in value_stats(ordering.others(rank), rtol).distinct_values
             if sign * (x - ql) > 0 and sign * (end - x) >= 0]
    if not cands:
        return 0.0
    best = max(cands) if sign > 0 else min(cands)
    return float(best) - ql


def heuristic_g0(ordering: EntryOrdering, stats: DiffStats, rank: int, bounds: DrChangeBounds,
                 rtol: float = DEFAULT_RTOL) -> float:
    """Set the entry to 0 when 0 is within reach, otherwise behave as :func:`heuristic_g`."""
    ql = float(ordering.values[rank])
    if ql == 0:
        return 0.0
    if ql < 0 and 0 <= ql + bounds.d_plus:
        return -ql
    if ql > 0 and 0 >= ql + bounds.d_minus:
        return -ql
    return heuristic_g(ordering, stats, rank, bounds, rtol)


@dataclass(frozen=True)
class OrderNeighborBounds:
    """Closest other values around q_l; ``None`` marks a missing neighbour."""

    upper_plus: float | None
    lower_plus: float | None
    upper_minus: float | None
    lower_minus: float | None


def order_neighbor_bounds(ordering: EntryOrdering, rank: int, rtol: float = DEFAULT_RTOL) -> OrderNeighborBounds:
    ql = float(ordering.values[rank])
    others = ordering.others(rank)
    tol = max(DEFAULT_ATOL, rtol * abs(ql))
    above = others[others > ql + tol]
    below = others[others < ql - tol]
    not_below = others[others >= ql - tol]
    not_above = others[others <= ql + tol]

    def pick(arr, fn):
        return float(fn(arr)) if arr.size else None

    return OrderNeighborBounds(
        upper_plus=pick(above, np.min),
        lower_plus=pick(not_above, np.max),
        upper_minus=pick(not_below, np.min),
        lower_minus=pick(below, np.max),
    )


def heuristic_m(ordering: EntryOrdering, stats: DiffStats, rank: int, nb: OrderNeighborBounds,
                rtol: float = DEFAULT_RTOL) -> float:
    """Move the entry toward the middle of its neighbours without crossing them.

    Interior entries move toward the midpoint of the wider gap; the largest
    and smallest values (by value, so duplicates of an extreme count too)
    either close in on their neighbour or move away to enlarge ``minD``.
    """
    ql = float(ordering.values[rank])
    md = stats.min_diff
    if nb.upper_plus is None or nb.lower_minus is None:
        md_others = _min_diff_without(ordering, rank, rtol)
        same = _close(md_others, md, rtol)
        if nb.upper_plus is None and nb.lower_minus is None:
            return 0.0
        if nb.upper_plus is None:
            return nb.lower_minus - ql + md if same else md_others - md
        return nb.upper_plus - ql - md if same else md - md_others
    if ql - nb.lower_minus <= nb.upper_plus - ql:
        return (nb.upper_plus - nb.lower_plus) / 2 - min(nb.upper_plus - ql, ql - nb.lower_plus)
    return (nb.lower_minus - nb.upper_minus) / 2 + min(nb.upper_minus - ql, ql - nb.lower_minus)


def clamp_final(w: float, interval: PreservationInterval) -> float:
    return min(max(w, interval.lo), interval.hi)


def shrink_interval(interval: PreservationInterval, q: QuboInstance) -> PreservationInterval:
    """Pull both nonzero endpoints slightly toward 0.

    At an endpoint a formerly suboptimal vector can tie with the optimum, so
    the set of minimizers may grow; strictly inside the interval it cannot.
    """
    tol = 1e3 * energy_tolerance(q)

    def pull(y):
        if y == 0:
            return 0.0
        d = max(1e-6 * abs(y), tol)
        return math.copysign(max(abs(y) - d, 0.0), y)

    return PreservationInterval(pull(interval.lo), pull(interval.hi))


@dataclass(frozen=True)
class CompressionConfig:
    heuristic: Heuristic = Heuristic.M
    selection: Selection = Selection.GREEDY
    max_iterations: int = 1000
    bound_method: BoundMethod = BoundMethod.AUTO
    rng_seed: int = 0
    merge_tolerance: float = DEFAULT_RTOL
    restarts: int = 10
    positions: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise QuboError("max_iterations must be at least 1")
        object.__setattr__(self, "heuristic", Heuristic(self.heuristic))
        object.__setattr__(self, "selection", Selection(self.selection))
        object.__setattr__(self, "bound_method", BoundMethod(self.bound_method))
        if self.positions is not None:
            pos = tuple((int(k), int(l)) for k, l in self.positions)
            if not pos or any(k > l for k, l in pos):
                raise QuboError("positions must be a nonempty list of (k, l) with k <= l")
            object.__setattr__(self, "positions", pos)


@dataclass(frozen=True)
class StepRecord:
    iter: int
    k: int
    l: int
    rank: int
    w_proposed: float
    y_lo: float
    y_hi: float
    w_applied: float
    dr_before: float
    dr_after: float
    skipped: bool


CSV_COLUMNS = [f for f in StepRecord.__dataclass_fields__]


@dataclass
class CompressionTrace:
    initial_dr: float
    records: list[StepRecord] = field(default_factory=list)

    @property
    def final_dr(self) -> float:
        return self.records[-1].dr_after if self.records else self.initial_dr

    @property
    def iterations(self) -> int:
        return len(self.records)

    def dr_series(self) -> np.ndarray:
        return np.array([self.initial_dr] + [r.dr_after for r in self.records])

    def summary(self) -> dict:
        applied = sum(not r.skipped for r in self.records)
        return {"initial_dr": self.initial_dr, "final_dr": self.final_dr,
                "iterations": self.iterations, "applied": applied}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r)) + "\n" for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([getattr(r, c) for c in CSV_COLUMNS])
        return buf.getvalue()


@dataclass(frozen=True)
class _Plan:
    pair: PinnedPair
    rank: int
    w_proposed: float
    interval: PreservationInterval
    w_applied: float
    dr_after: float
    skipped: bool


def _propose(ordering, stats, rank, heuristic: Heuristic, rtol) -> float:
    if heuristic is Heuristic.M:
        return heuristic_m(ordering, stats, rank, order_neighbor_bounds(ordering, rank, rtol), rtol)
    b = dr_change_bounds(ordering, stats, rank, rtol)
    if heuristic is Heuristic.G0:
        return heuristic_g0(ordering, stats, rank, b, rtol)
    return heuristic_g(ordering, stats, rank, b, rtol)


def _plan(q, ordering, stats, pair, config, seed, table) -> _Plan:
    rtol = config.merge_tolerance
    rank = ordering.rank_of(pair.k, pair.l)
    w_prop = _propose(ordering, stats, rank, config.heuristic, rtol)
    bset = subspace_bounds(q, pair, config.bound_method, restarts=config.restarts, seed=seed, table=table)
    interval = preservation_interval(bset)
    w = clamp_final(w_prop, shrink_interval(interval, q))
    ql = float(ordering.values[rank])
    if _close(ql + w, ql, rtol):
        # below merge resolution the entry would not change value
        w = 0.0
    dr_after = stats.dr_bits
    if w != 0:
        ok = admissible(ordering, stats, rank, w, rtol)
        if ok:
            dr_after = diff_stats(q.add(pair.k, pair.l, w), rtol).dr_bits
            ok = dr_after <= stats.dr_bits + DR_TOLERANCE
        if not ok:
            w, dr_after = 0.0, stats.dr_bits
    return _Plan(pair, rank, w_prop, interval, w, dr_after, w == 0)


def active_positions(q: QuboInstance, stats: DiffStats | None = None,
                     rtol: float = DEFAULT_RTOL) -> list[tuple[int, int]]:
    """Upper-triangle positions whose value realizes minD or maxD."""
    stats = stats or diff_stats(q, rtol)
    d = stats.distinct_values
    keys = {float(d[0]), float(d[-1])}
    gaps = np.diff(d)
    for i in np.flatnonzero(np.abs(gaps - stats.min_diff) <= max(DEFAULT_ATOL, rtol * stats.min_diff)):
        keys.update((float(d[i]), float(d[i + 1])))
    return [(k, l) for k, l in upper_positions(q.n)
            if any(_close(float(q.matrix[k, l]), v, rtol) for v in keys)]


def select_next(q: QuboInstance, strategy: Selection | str, rng: np.random.Generator, iteration: int = 0,
                candidates=None) -> PinnedPair:
    """Pick the next position for the Random or Sequential strategy.

    ``GreedyImpact`` needs tentative updates and is handled by :func:`compress`;
    called here it returns a uniformly chosen active position.
    """
    strategy = Selection(strategy)
    stats = diff_stats(q)
    if stats.degenerate:
        raise DegenerateError("cannot select a position in a degenerate instance")
    pool = list(candidates) if candidates is not None else upper_positions(q.n)
    if strategy is Selection.SEQUENTIAL:
        return PinnedPair(*pool[iteration % len(pool)])
    if strategy is Selection.GREEDY:
        act = [p for p in active_positions(q, stats) if p in set(pool)] or pool
        return PinnedPair(*act[int(rng.integers(len(act)))])
    return PinnedPair(*pool[int(rng.integers(len(pool)))])


def compress(q: QuboInstance, config: CompressionConfig | None = None) -> tuple[QuboInstance, CompressionTrace]:
    """Run the iterative compression and return the compressed instance and its trace.

    With exhaustive bounds every minimizer of the result is a minimizer of ``q``.
    """
    config = config or CompressionConfig()
    rtol = config.merge_tolerance
    stats = diff_stats(q, rtol)
    if stats.degenerate:
        raise DegenerateError("instance has fewer than two distinct values")
    rng = np.random.default_rng(config.rng_seed)
    pool = list(config.positions) if config.positions is not None else upper_positions(q.n)
    for k, l in pool:
        PinnedPair(k, l).check(q.n)
    method = config.bound_method.resolve(q.n)
    work = q
    trace = CompressionTrace(stats.dr_bits)
    for it in range(config.max_iterations):
        if stats.degenerate:
            break
        ordering = entry_ordering(work)
        table = all_energies(work) if method is BoundMethod.EXHAUSTIVE else None
        seed = int(rng.integers(2**31))
        if config.selection is Selection.GREEDY:
            act = set(active_positions(work, stats, rtol))
            cands = [p for p in pool if p in act] or pool
            plans = [_plan(work, ordering, stats, PinnedPair(*p), config, seed, table) for p in cands]
            best = min(p.dr_after for p in plans)
            ties = [p for p in plans if p.dr_after <= best + DR_TOLERANCE]
            plan = ties[int(rng.integers(len(ties)))]
        else:
            pair = select_next(work, config.selection, rng, it, pool)
            plan = _plan(work, ordering, stats, pair, config, seed, table)
        if not plan.skipped:
            work = work.add(plan.pair.k, plan.pair.l, plan.w_applied)
        trace.records.append(StepRecord(
            it, plan.pair.k, plan.pair.l, plan.rank, plan.w_proposed, plan.interval.lo,
            plan.interval.hi, plan.w_applied, stats.dr_bits, plan.dr_after, plan.skipped))
        if not plan.skipped:
            stats = diff_stats(work, rtol)
    return work, trace
