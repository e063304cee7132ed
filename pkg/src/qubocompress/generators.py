"""Seeded instance generators: uniform random, SubsetSum and two-cluster clustering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import QuboInstance, round_half_up
from .errors import ParseError, QuboError


def gen_uniform(n: int, seed: int = 0, low: float = -0.5, high: float = 0.5) -> QuboInstance:
    """Upper-triangle entries drawn i.i.d. uniform on ``[low, high]``."""
    if n < 1:
        raise QuboError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    return QuboInstance(np.triu(rng.uniform(low, high, size=(n, n))))


@dataclass(frozen=True)
class SubsetSumProblem:
    values: tuple[int, ...]
    target: int
    planted: frozenset[int]

    def __post_init__(self):
        if any(v < 0 for v in self.values) or self.target < 0:
            raise QuboError("values and target must be nonnegative")
        if sum(self.values[i] for i in self.planted) != self.target:
            raise QuboError("planted subset does not sum to the target")

    @property
    def n(self) -> int:
        return len(self.values)

    def planted_vector(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.uint8)
        x[sorted(self.planted)] = 1
        return x

    def to_json(self) -> str:
        return json.dumps({"values": list(self.values), "target": self.target,
                           "planted": sorted(self.planted)})

    @classmethod
    def from_json(cls, text: str) -> "SubsetSumProblem":
        try:
            obj = json.loads(text)
            return cls(tuple(int(v) for v in obj["values"]), int(obj["target"]),
                       frozenset(int(i) for i in obj["planted"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, QuboError):
                raise
            raise ParseError(f"invalid SubsetSum JSON: {exc}") from None


def subsetsum_to_qubo(p: SubsetSumProblem) -> QuboInstance:
    """QUBO whose energy is ``(sum_i a_i x_i - T)^2 - T^2``."""
    a = np.array(p.values, dtype=np.float64)
    m = 2.0 * np.outer(a, a)
    np.fill_diagonal(m, a * a - 2.0 * p.target * a)
    return QuboInstance(np.triu(m))


def gen_subsetsum(n: int, seed: int = 0) -> SubsetSumProblem:
    """Heavy-tailed values with a planted subset of roughly half the elements.

    ``a_i = |round(10 Z)|`` with Z standard Cauchy (inverse-CDF sampling);
    the subset size is a rounded triangular draw on ``(n/5, n/2, 4n/5)``
    clamped to ``[1, n - 1]``.
    """
    if n < 2:
        raise QuboError(f"SubsetSum needs n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    z = np.tan(np.pi * (rng.random(n) - 0.5))
    values = tuple(int(v) for v in np.abs(round_half_up(10.0 * z)))
    k = int(math.floor(rng.triangular(n / 5, n / 2, 4 * n / 5) + 0.5))
    k = min(max(k, 1), n - 1)
    planted = frozenset(int(i) for i in rng.choice(n, size=k, replace=False))
    return SubsetSumProblem(values, sum(values[i] for i in planted), planted)


@dataclass(frozen=True, eq=False)
class ClusteringDataset:
    points: np.ndarray
    outlier_indices: frozenset[int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "outlier"])
        for i, (x, y) in enumerate(self.points):
            w.writerow([repr(float(x)), repr(float(y)), int(i in self.outlier_indices)])
        return buf.getvalue()


def two_means_qubo(points: np.ndarray, pinned: int | None = -1) -> QuboInstance:
    """Balanced two-cluster QUBO with a linear kernel.

    With centred points ``p_u`` and labels ``s = 2b - 1``, maximizing
    ``||sum_u s_u p_u||^2`` separates the data into two groups. Expanded in
    the bits ``b`` (constant dropped) this gives
    ``Q_uu = -4 G_uu + 4 (G 1)_u`` and ``Q_uv = -8 G_uv`` with ``G`` the Gram
    matrix. Point ``pinned`` is fixed to class 0, which removes its variable
    and breaks the label symmetry.
    """
    p = np.asarray(points, dtype=np.float64)
    p = p - p.mean(axis=0)
    G = p @ p.T
    m = -8.0 * G
    np.fill_diagonal(m, -4.0 * np.diag(G) + 4.0 * G.sum(axis=1))
    m = np.triu(m)
    if pinned is not None:
        keep = np.delete(np.arange(len(p)), pinned)
        m = m[np.ix_(keep, keep)]
    return QuboInstance(m)


def gen_binclustering(seed: int = 0, outliers: bool = True, n_points: int = 20,
                      shift: float = 4.0, outlier_scale: float = 20.0) -> tuple[ClusteringDataset, QuboInstance]:
    """Two Gaussian blobs; the second and second-to-last points become outliers.

    The first half is shifted by ``(-shift, 0)``, the second by ``(+shift, 0)``;
    the last point is pinned to class 0, so the QUBO has ``n_points - 1`` variables.
    """
    if n_points < 4:
        raise QuboError("need at least 4 points")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_points, 2))
    half = n_points // 2
    pts[:half, 0] -= shift
    pts[half:, 0] += shift
    out = frozenset()
    if outliers:
        out = frozenset({0, n_points - 2})
        pts[sorted(out)] *= outlier_scale
    ds = ClusteringDataset(pts, out)
    return ds, two_means_qubo(pts)
