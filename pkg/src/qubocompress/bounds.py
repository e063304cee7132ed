"""Bounds on subspace minima and the optimum-preserving change interval.

For a position (k, l) and an assignment of the pinned bits, the subspace
minimum is the lowest energy over all vectors with ``x_k, x_l`` fixed.
Changing ``Q_kl`` by ``w`` only moves vectors with ``x_k = x_l = 1``, so
comparing bounds on the four (or, for k == l, two) subspace minima tells how
far ``Q_kl`` can move without losing every global optimum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .core import QuboInstance, all_energies, energy
from .errors import QuboError
from .solvers import local_search_batch

Assignment = tuple[int, ...]

# total capacity of the implication network must stay inside int32
_FLOW_BUDGET = 2**29
EXHAUSTIVE_AUTO_LIMIT = 12


@dataclass(frozen=True)
class PinnedPair:
    k: int
    l: int

    def __post_init__(self):
        if not 0 <= self.k <= self.l:
            raise QuboError(f"invalid pinned pair ({self.k}, {self.l}); need 0 <= k <= l")

    @property
    def diagonal(self) -> bool:
        return self.k == self.l

    @property
    def indices(self) -> tuple[int, ...]:
        return (self.k,) if self.diagonal else (self.k, self.l)

    def assignments(self) -> list[Assignment]:
        if self.diagonal:
            return [(0,), (1,)]
        return [(0, 0), (0, 1), (1, 0), (1, 1)]

    @property
    def active(self) -> Assignment:
        """The assignment whose subspace an update of Q_kl affects."""
        return (1,) if self.diagonal else (1, 1)

    def check(self, n: int):
        if self.l >= n:
            raise QuboError(f"pair ({self.k}, {self.l}) out of range for n={n}")


class BoundMethod(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    HEURISTIC = "heuristic"
    HEURISTIC_ROOF_DUAL = "roofdual"
    AUTO = "auto"

    def resolve(self, n: int) -> "BoundMethod":
        if self is BoundMethod.AUTO:
            return BoundMethod.EXHAUSTIVE if n <= EXHAUSTIVE_AUTO_LIMIT else BoundMethod.HEURISTIC_ROOF_DUAL
        return self


@dataclass(frozen=True)
class SubspaceBoundSet:
    pair: PinnedPair
    lower: dict
    upper: dict
    method: dict

    def __post_init__(self):
        for a in self.pair.assignments():
            if self.lower[a] > self.upper[a]:
                raise QuboError(f"lower bound exceeds upper bound for assignment {a}")

    def to_json_obj(self) -> dict:
        return {
            "pair": [self.pair.k, self.pair.l],
            "bounds": [
                {"assignment": "".join(map(str, a)), "lower": self.lower[a],
                 "upper": self.upper[a], "method": self.method[a]}
                for a in self.pair.assignments()
            ],
        }


@dataclass(frozen=True)
class PreservationInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= 0 <= self.hi:
            raise QuboError(f"interval [{self.lo}, {self.hi}] must contain 0")

    def __contains__(self, w: float) -> bool:
        return self.lo <= w <= self.hi


def pinned_vector(n: int, pair: PinnedPair, assignment: Assignment, fill: int = 0) -> np.ndarray:
    x = np.full(n, fill, dtype=np.uint8)
    for i, b in zip(pair.indices, assignment):
        x[i] = b
    return x


def subspace_mask(n: int, pair: PinnedPair, assignment: Assignment) -> np.ndarray:
    """Boolean mask over lexicographic codes selecting the pinned subspace."""
    codes = np.arange(1 << n, dtype=np.int64)
    mask = np.ones(1 << n, dtype=bool)
    for i, b in zip(pair.indices, assignment):
        mask &= ((codes >> (n - 1 - i)) & 1) == b
    return mask


def subspace_bounds_exhaustive(q: QuboInstance, pair: PinnedPair, limit: int | None = None,
                               table: np.ndarray | None = None) -> SubspaceBoundSet:
    """Exact subspace minima by enumeration; ``table`` may hold precomputed energies."""
    pair.check(q.n)
    E = all_energies(q, limit) if table is None else table
    lo, hi, meth = {}, {}, {}
    for a in pair.assignments():
        v = float(E[subspace_mask(q.n, pair, a)].min())
        lo[a] = hi[a] = v
        meth[a] = "exhaustive"
    return SubspaceBoundSet(pair, lo, hi, meth)


def upper_bound_zero_vector(q: QuboInstance, pair: PinnedPair, assignment: Assignment) -> float:
    """Energy of the all-zeros vector with the pinned bits set."""
    return energy(q, pinned_vector(q.n, pair, assignment))


def upper_bound_local_search(q: QuboInstance, pair: PinnedPair, assignment: Assignment,
                             restarts: int = 10, seed: int = 0) -> float:
    """Best energy of a restarted local search inside the pinned subspace.

    The first start is the pinned zero vector, so the result never exceeds
    :func:`upper_bound_zero_vector`.
    """
    if restarts < 1:
        raise QuboError("restarts must be at least 1")
    n = q.n
    rng = np.random.default_rng(seed)
    starts = rng.integers(0, 2, size=(restarts, n), dtype=np.uint8)
    starts[0] = 0
    for i, b in zip(pair.indices, assignment):
        starts[:, i] = b
    finals = local_search_batch(q, starts, fixed=pair.indices)
    xf = finals.astype(np.float64)
    return float(np.einsum("ri,ij,rj->r", xf, q.matrix, xf).min())


def lower_bound_negative_sum(q: QuboInstance, pair: PinnedPair, assignment: Assignment) -> float:
    """Sum of every negative coefficient that can be active in the pinned subspace."""
    neg = QuboInstance(np.minimum(q.matrix, 0.0))
    return energy(neg, pinned_vector(q.n, pair, assignment, fill=1))


def reduce_pinned(q: QuboInstance, pair: PinnedPair, assignment: Assignment):
    """Restrict ``f_Q`` to the pinned subspace.

    Returns ``(constant, linear, quadratic, free)`` where ``quadratic`` is
    strictly upper triangular over the free variables ``free``.
    """
    n = q.n
    Q = q.matrix
    pinned = np.array(pair.indices)
    z = np.array(assignment, dtype=np.float64)
    free = np.setdiff1d(np.arange(n), pinned)
    const = float(z @ Q[np.ix_(pinned, pinned)] @ z)
    S = Q + Q.T
    linear = np.diag(Q)[free] + S[np.ix_(free, pinned)] @ z
    quad = np.triu(Q[np.ix_(free, free)], 1)
    return const, linear, quad, free


def roof_dual(linear: np.ndarray, quad: np.ndarray) -> float:
    """Roof-duality lower bound on ``min_x sum_i a_i x_i + sum_{i<j} b_ij x_i x_j``.

    The function is rewritten as a posiform ``c0 + sum alpha_T T`` (nonnegative
    coefficients on products of literals); each term ``alpha * u * v`` becomes
    arcs ``u -> not v`` and ``v -> not u`` in an implication network whose
    source and sink are the constant-one literal and its complement (linear
    terms pair with that literal). The bound is ``c0 + maxflow / 2``.

    Capacities are scaled by a power of two and floored so the flow runs in
    exact integer arithmetic; since max-flow is monotone in the capacities the
    result stays a valid lower bound.
    """
    nf = len(linear)
    if nf == 0:
        return 0.0
    a = np.array(linear, dtype=np.float64)
    b = np.triu(np.asarray(quad, dtype=np.float64), 1)
    a = a + np.where(b < 0, b, 0.0).sum(axis=1)
    c0 = math.fsum(np.minimum(a, 0.0))

    # literal nodes: x_i -> i, not x_i -> i + nf; source 2nf, sink 2nf + 1
    src, snk = 2 * nf, 2 * nf + 1

    def comp(u):
        if u == src:
            return snk
        return u + nf if u < nf else u - nf

    terms = []
    ii, jj = np.nonzero(b)
    for i, j in zip(ii.tolist(), jj.tolist()):
        c = b[i, j]
        terms.append((i, j, c) if c > 0 else (i, j + nf, -c))
    for i in range(nf):
        if a[i] > 0:
            terms.append((i, src, a[i]))
        elif a[i] < 0:
            terms.append((i + nf, src, -a[i]))
    if not terms:
        return c0
    total = sum(t[2] for t in terms)
    shift = math.floor(math.log2(_FLOW_BUDGET / (2.0 * total)))
    scale = 2.0**shift
    us, vs, caps = [], [], []
    for u, v, c in terms:
        cap = math.floor(c * scale)
        if cap <= 0:
            continue
        us += [u, v]
        vs += [comp(v), comp(u)]
        caps += [cap, cap]
    if not caps:
        return c0
    graph = csr_matrix((np.array(caps, dtype=np.int32), (us, vs)), shape=(2 * nf + 2, 2 * nf + 2))
    flow = maximum_flow(graph, src, snk, method="dinic").flow_value
    return c0 + flow / (2.0 * scale)


def lower_bound_roof_dual(q: QuboInstance, pair: PinnedPair, assignment: Assignment) -> float:
    const, linear, quad, _ = reduce_pinned(q, pair, assignment)
    return const + roof_dual(linear, quad)


def subspace_bounds(q: QuboInstance, pair: PinnedPair, method: BoundMethod | str = BoundMethod.AUTO,
                    restarts: int = 10, seed: int = 0, table: np.ndarray | None = None) -> SubspaceBoundSet:
    """Bounds on all subspace minima of ``pair`` with the requested method."""
    pair.check(q.n)
    method = BoundMethod(method).resolve(q.n)
    if method is BoundMethod.EXHAUSTIVE:
        return subspace_bounds_exhaustive(q, pair, table=table)
    lo, hi, meth = {}, {}, {}
    for a in pair.assignments():
        hi[a] = upper_bound_local_search(q, pair, a, restarts=restarts, seed=seed)
        if method is BoundMethod.HEURISTIC_ROOF_DUAL:
            lo[a] = max(lower_bound_roof_dual(q, pair, a), lower_bound_negative_sum(q, pair, a))
            meth[a] = "localsearch/roofdual"
        else:
            lo[a] = lower_bound_negative_sum(q, pair, a)
            meth[a] = "localsearch/negsum"
        # an upper bound attained by a concrete vector can never lie below a valid lower bound
        lo[a] = min(lo[a], hi[a])
    return SubspaceBoundSet(pair, lo, hi, meth)


def preservation_interval(bounds: SubspaceBoundSet) -> PreservationInterval:
    """Range of changes to ``Q_kl`` that keeps at least one global optimum."""
    act = bounds.pair.active
    others = [a for a in bounds.pair.assignments() if a != act]
    lo = min(0.0, min(bounds.upper[a] for a in others) - bounds.lower[act])
    hi = max(0.0, min(bounds.lower[a] for a in others) - bounds.upper[act])
    return PreservationInterval(lo, hi)


def variable_fixing_check(bounds: SubspaceBoundSet) -> Assignment | None:
    """Assignment certified to contain every global optimum, if any.

    ``ab`` is certified when its upper bound lies strictly below the lower
    bounds of all other subspaces; then ``x_k, x_l`` may be fixed to ``ab``.
    """
    for a in bounds.pair.assignments():
        rest = [bounds.lower[b] for b in bounds.pair.assignments() if b != a]
        if bounds.upper[a] < min(rest):
            return a
    return None


def excluded_assignments(bounds: SubspaceBoundSet) -> list[Assignment]:
    """Assignments certified to contain no global optimum."""
    out = []
    for a in bounds.pair.assignments():
        rest = [bounds.upper[b] for b in bounds.pair.assignments() if b != a]
        if bounds.lower[a] > min(rest):
            out.append(a)
    return out
