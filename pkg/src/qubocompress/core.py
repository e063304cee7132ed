"""QUBO instances, energies, exhaustive solving and dynamic-range statistics.

All indices are 0-based. Bit vectors are enumerated in lexicographic order,
with variable 0 as the most significant bit, so the integer code of a vector
is ``sum(x[i] << (n - 1 - i))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateError, DimensionError, EnumerationLimitError, QuboError

DEFAULT_ENUMERATION_LIMIT = 24
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12

# bits handled by the inner (vectorized) block during enumeration
_LOW_BITS = 12
_BLOCK_ROWS = 256


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """An upper-triangular QUBO coefficient matrix.

    The matrix is copied on construction and made read-only, so instances
    behave as values and can be shared freely.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise QuboError("QUBO coefficients must be finite")
        if np.any(np.tril(m, -1) != 0):
            raise QuboError("entries below the diagonal must be zero")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, n: int, entries) -> "QuboInstance":
        """Build from ``(i, j, value)`` triples with ``i <= j``; repeated positions add up."""
        m = np.zeros((n, n))
        for i, j, v in entries:
            i, j = int(i), int(j)
            if not (0 <= i <= j < n):
                raise QuboError(f"invalid position ({i}, {j}) for n={n}")
            m[i, j] += float(v)
        return cls(m)

    @classmethod
    def from_dense(cls, m, fold: bool = True) -> "QuboInstance":
        """Build from an arbitrary square matrix, folding the lower triangle onto the upper one."""
        m = np.asarray(m, dtype=np.float64)
        if fold:
            m = np.triu(m) + np.triu(m.T, 1)
        return cls(m)

    @classmethod
    def zeros(cls, n: int) -> "QuboInstance":
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def __repr__(self):
        return f"QuboInstance(n={self.n})"

    def __getitem__(self, pos):
        return float(self.matrix[pos])

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """Upper-triangle positions ``(i, j, value)`` in row-major order, zeros included."""
        for i in range(self.n):
            for j in range(i, self.n):
                yield i, j, float(self.matrix[i, j])

    def with_entry(self, k: int, l: int, value: float) -> "QuboInstance":
        if k > l:
            raise QuboError(f"position ({k}, {l}) is below the diagonal")
        m = self.matrix.copy()
        m[k, l] = value
        return QuboInstance(m)

    def add(self, k: int, l: int, w: float) -> "QuboInstance":
        return self.with_entry(k, l, self.matrix[k, l] + w)

    def energy(self, x) -> float:
        return energy(self, x)


def upper_positions(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def _as_bits(x, n: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != n:
        raise DimensionError(f"bit vector of length {x.shape[-1]} does not match n={n}")
    if np.any((x != 0) & (x != 1)):
        raise QuboError("bit vectors may only contain 0 and 1")
    return x.astype(np.float64)


def energy(q: QuboInstance, x) -> float:
    """``x^T Q x`` for a single bit vector."""
    xb = _as_bits(x, q.n)
    if xb.ndim != 1:
        raise DimensionError("energy() takes a single bit vector; use energies() for batches")
    return float(xb @ q.matrix @ xb)


def energies(q: QuboInstance, xs) -> np.ndarray:
    """Energies of a batch of bit vectors (rows of ``xs``)."""
    xb = np.atleast_2d(_as_bits(xs, q.n))
    return np.einsum("ri,ij,rj->r", xb, q.matrix, xb)


def bits_of(codes, n: int) -> np.ndarray:
    """Bit vectors (as uint8 rows) for lexicographic integer codes."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[..., None] >> shifts) & 1).astype(np.uint8)


def code_of(x) -> int:
    code = 0
    for b in np.asarray(x).astype(int):
        code = (code << 1) | int(b)
    return code


def energy_tolerance(q: QuboInstance) -> float:
    """Absolute slack under which two computed energies are treated as equal.

    Bounds the floating-point error of summing at most n^2 coefficients,
    so it scales with the instance and is zero for the zero matrix.
    """
    n = q.n
    return 4.0 * n * n * np.finfo(float).eps * float(np.abs(q.matrix).sum())


def _check_limit(n: int, limit: int | None):
    limit = DEFAULT_ENUMERATION_LIMIT if limit is None else limit
    if n > limit:
        raise EnumerationLimitError(f"n={n} exceeds the enumeration limit of {limit}")


def energy_blocks(q: QuboInstance, limit: int | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(offset, energies)`` blocks covering all 2^n vectors in lexicographic order.

    The trailing variables form a vectorized inner block; leading variables
    are iterated in chunks. Each energy is evaluated from scratch (no
    incremental accumulation), so equal energies compare equal up to a
    handful of ulps.
    """
    n = q.n
    _check_limit(n, limit)
    Q = q.matrix
    low = min(n, _LOW_BITS)
    high = n - low
    XL = bits_of(np.arange(1 << low), low).astype(np.float64)
    QL = Q[high:, high:]
    fL = np.einsum("ri,ij,rj->r", XL, QL, XL)
    if high == 0:
        yield 0, fL
        return
    QH = Q[:high, :high]
    C = Q[:high, high:]
    n_high = 1 << high
    for start in range(0, n_high, _BLOCK_ROWS):
        stop = min(n_high, start + _BLOCK_ROWS)
        XH = bits_of(np.arange(start, stop), high).astype(np.float64)
        fH = np.einsum("ri,ij,rj->r", XH, QH, XH)
        cross = (XH @ C) @ XL.T
        block = (fH[:, None] + cross) + fL[None, :]
        yield start << low, block.ravel()


def all_energies(q: QuboInstance, limit: int | None = None) -> np.ndarray:
    """Energies of all 2^n bit vectors, indexed by lexicographic code."""
    return np.concatenate([b for _, b in energy_blocks(q, limit)])


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Global minimum value and all minimizing vectors (by lexicographic code)."""

    n: int
    min_value: float
    minimizer_codes: np.ndarray

    @property
    def minimizers(self) -> np.ndarray:
        return bits_of(self.minimizer_codes, self.n)

    def as_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(b) for b in row) for row in self.minimizers}

    def __len__(self):
        return len(self.minimizer_codes)


def brute_force_minima(q: QuboInstance, limit: int | None = None, tol: float | None = None) -> SolveResult:
    """Exhaustively find the global minimum and every vector attaining it.

    Energies within ``tol`` (default :func:`energy_tolerance`) of the minimum
    count as minimal.
    """
    tol = energy_tolerance(q) if tol is None else tol
    best = math.inf
    cand: list[np.ndarray] = []
    for offset, block in energy_blocks(q, limit):
        bmin = float(block.min())
        if bmin > best + tol:
            continue
        best = min(best, bmin)
        idx = np.flatnonzero(block <= best + tol)
        cand.append(np.stack([idx + offset, block[idx]]))
    allc = np.concatenate(cand, axis=1)
    keep = allc[1] <= best + tol
    codes = allc[0, keep].astype(np.int64)
    return SolveResult(q.n, best, codes)


def scale(q: QuboInstance, alpha: float) -> QuboInstance:
    if not alpha > 0:
        raise QuboError(f"scaling factor must be positive, got {alpha}")
    return QuboInstance(alpha * q.matrix)


def round_half_up(a):
    """Nearest integer, halves rounded towards +inf (0.5 -> 1, -0.5 -> 0)."""
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5)


def round_entries(q: QuboInstance) -> QuboInstance:
    return QuboInstance(round_half_up(q.matrix))


@dataclass(frozen=True, eq=False)
class RoundingErrorMatrix:
    """``round(alpha*Q) - alpha*Q``; entries lie in (-1/2, 1/2]."""

    alpha: float
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def as_qubo(self) -> QuboInstance:
        return QuboInstance(self.entries)

    def value_error(self, x) -> float:
        """Error on the unscaled energy of ``x`` caused by rounding after scaling."""
        return energy(self.as_qubo(), x) / self.alpha


def rounding_error_matrix(q: QuboInstance, alpha: float) -> RoundingErrorMatrix:
    if not alpha > 0:
        raise QuboError(f"scaling factor must be positive, got {alpha}")
    a = alpha * q.matrix
    e = round_half_up(a) - a
    e.setflags(write=False)
    return RoundingErrorMatrix(alpha, e)


@dataclass(frozen=True, eq=False)
class DiffStats:
    """Pairwise-difference statistics of a finite value set.

    ``dr_bits`` is the dynamic range log2(max_diff / min_diff); it is 0 and
    ``degenerate`` is set when fewer than two distinct values exist.
    """

    distinct_values: np.ndarray
    min_diff: float
    max_diff: float
    dr_bits: float
    degenerate: bool

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_values)


def distinct_sorted(values, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Sorted distinct values; neighbours closer than the tolerance are merged."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        return v
    keep = [v[0]]
    for x in v[1:]:
        last = keep[-1]
        if x - last > max(atol, rtol * max(abs(x), abs(last))):
            keep.append(x)
    return np.array(keep)


def value_stats(values, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> DiffStats:
    d = distinct_sorted(values, rtol, atol)
    if d.size < 2:
        return DiffStats(d, 0.0, 0.0, 0.0, True)
    min_diff = float(np.min(np.diff(d)))
    max_diff = float(d[-1] - d[0])
    return DiffStats(d, min_diff, max_diff, math.log2(max_diff / min_diff), False)


def diff_stats(q: QuboInstance, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> DiffStats:
    """Dynamic-range statistics over all n^2 entries (the lower-triangle zeros included)."""
    return value_stats(q.matrix, rtol, atol)


def dynamic_range(q: QuboInstance) -> float:
    return diff_stats(q).dr_bits


@dataclass(frozen=True, eq=False)
class EntryOrdering:
    """All n^2 positions sorted by value; ties broken by (row, column)."""

    n: int
    values: np.ndarray
    rows: np.ndarray
    cols: np.ndarray

    @property
    def m(self) -> int:
        return len(self.values)

    def rank_of(self, k: int, l: int) -> int:
        """0-based rank of position (k, l)."""
        hit = np.flatnonzero((self.rows == k) & (self.cols == l))
        return int(hit[0])

    def position(self, rank: int) -> tuple[int, int]:
        return int(self.rows[rank]), int(self.cols[rank])

    def is_modifiable(self, rank: int) -> bool:
        return bool(self.rows[rank] <= self.cols[rank])

    def others(self, rank: int) -> np.ndarray:
        """Values of every position except ``rank`` (still sorted)."""
        return np.delete(self.values, rank)


def entry_ordering(q: QuboInstance) -> EntryOrdering:
    n = q.n
    rows, cols = np.divmod(np.arange(n * n), n)
    vals = q.matrix.ravel()
    order = np.lexsort((cols, rows, vals))
    return EntryOrdering(n, vals[order].copy(), rows[order], cols[order])


@dataclass(frozen=True)
class SpectralGapResult:
    y1: float
    y2: float
    gamma: float
    alpha_star: float


def spectral_gap(q: QuboInstance, limit: int | None = None) -> SpectralGapResult:
    """Gap between the lowest and second-lowest distinct energy, and the safe scale factor.

    Rounding ``alpha * Q`` for any ``alpha >= alpha_star`` keeps the optimum.
    """
    tol = energy_tolerance(q)
    y1 = y2 = math.inf
    for _, block in energy_blocks(q, limit):
        b1 = float(block.min())
        b2 = float(block[block > b1 + tol].min(initial=math.inf))
        lo = min(y1, b1)
        rest = [v for v in (y1, y2, b1, b2) if v > lo + tol]
        y1, y2 = lo, min(rest, default=math.inf)
    if not math.isfinite(y2):
        raise DegenerateError("energy function is constant; spectral gap undefined")
    gamma = y2 - y1
    n = q.n
    return SpectralGapResult(y1, y2, gamma, (n * n + n) / (4.0 * gamma))


def optimum_included(candidate: QuboInstance, reference: QuboInstance, limit: int | None = None) -> bool:
    """Whether every global minimizer of ``candidate`` also minimizes ``reference``."""
    if candidate.n != reference.n:
        raise DimensionError(f"n={candidate.n} vs n={reference.n}")
    ref = brute_force_minima(reference, limit)
    cand = brute_force_minima(candidate, limit)
    vals = energies(reference, cand.minimizers)
    return bool(np.all(vals <= ref.min_value + energy_tolerance(reference)))


def as_bit_array(x: Sequence[int] | str) -> np.ndarray:
    if isinstance(x, str):
        return np.array([int(c) for c in x.strip()], dtype=np.uint8)
    return np.asarray(x, dtype=np.uint8)


__all__ = [
    "DEFAULT_ENUMERATION_LIMIT",
    "DiffStats",
    "EntryOrdering",
    "QuboInstance",
    "RoundingErrorMatrix",
    "SolveResult",
    "SpectralGapResult",
    "all_energies",
    "bits_of",
    "brute_force_minima",
    "code_of",
    "diff_stats",
    "distinct_sorted",
    "dynamic_range",
    "energies",
    "energy",
    "energy_blocks",
    "energy_tolerance",
    "entry_ordering",
    "optimum_included",
    "round_entries",
    "round_half_up",
    "rounding_error_matrix",
    "scale",
    "spectral_gap",
    "upper_positions",
    "value_stats",
]
