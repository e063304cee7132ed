from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import random_upper
from qubocompress.bounds import (
    BoundMethod,
    PinnedPair,
    PreservationInterval,
    SubspaceBoundSet,
    excluded_assignments,
    lower_bound_negative_sum,
    lower_bound_roof_dual,
    preservation_interval,
    reduce_pinned,
    roof_dual,
    subspace_bounds,
    subspace_bounds_exhaustive,
    subspace_mask,
    upper_bound_local_search,
    upper_bound_zero_vector,
    variable_fixing_check,
)
from qubocompress.core import (
    QuboInstance,
    all_energies,
    brute_force_minima,
    energy,
    energy_tolerance,
    upper_positions,
)
from qubocompress.errors import QuboError

PAIR_12 = PinnedPair(1, 2)


def linearization_lp(a, b) -> float:
    """LP relaxation of the standard linearization; equals the roof-dual bound."""
    nf = len(a)
    pairs = [(i, j) for i in range(nf) for j in range(i + 1, nf) if b[i, j] != 0]
    nv = nf + len(pairs)
    c = np.concatenate([a, [b[i, j] for i, j in pairs]])
    rows, rhs = [], []
    for t, (i, j) in enumerate(pairs):
        y = nf + t
        if b[i, j] > 0:
            r = np.zeros(nv); r[i] = r[j] = 1; r[y] = -1  # y >= x_i + x_j - 1
            rows.append(r); rhs.append(1)
        else:
            for v in (i, j):
                r = np.zeros(nv); r[y] = 1; r[v] = -1  # y <= x_v
                rows.append(r); rhs.append(0)
    res = linprog(c, A_ub=np.array(rows) if rows else None, b_ub=rhs if rows else None,
                  bounds=[(0, 1)] * nv, method="highs")
    return res.fun


class TestPinnedPair:
    def test_assignments(self):
        assert PinnedPair(0, 0).assignments() == [(0,), (1,)]
        assert len(PinnedPair(0, 1).assignments()) == 4
        assert PinnedPair(0, 1).active == (1, 1)

    def test_invalid(self):
        with pytest.raises(QuboError):
            PinnedPair(2, 1)
        with pytest.raises(QuboError):
            PinnedPair(0, 3).check(3)

    def test_masks_partition(self):
        p = PinnedPair(1, 3)
        total = sum(subspace_mask(5, p, a).astype(int) for a in p.assignments())
        assert np.all(total == 1)


class TestThreeVar:
    def test_exhaustive_minima(self, three_var):
        b = subspace_bounds_exhaustive(three_var, PAIR_12)
        expected = {(0, 0): -1.0, (0, 1): -1.5, (1, 0): -0.2, (1, 1): -1.9}
        for a, v in expected.items():
            assert b.lower[a] == pytest.approx(v) and b.upper[a] == pytest.approx(v)

    def test_zero_vector_bounds(self, three_var):
        vals = [upper_bound_zero_vector(three_var, PAIR_12, a) for a in PAIR_12.assignments()]
        assert vals == pytest.approx([0, -1.5, 0.4, -1.9])

    def test_interval(self, three_var):
        iv = preservation_interval(subspace_bounds_exhaustive(three_var, PAIR_12))
        assert iv.hi == pytest.approx(0.4)
        assert iv.lo == 0

    def test_fixing(self, three_var):
        b = subspace_bounds_exhaustive(three_var, PAIR_12)
        assert variable_fixing_check(b) == (1, 1)
        assert set(excluded_assignments(b)) == {(0, 0), (0, 1), (1, 0)}

    def test_roof_dual_exact_with_one_free_variable(self, three_var):
        for a in PAIR_12.assignments():
            exact = subspace_bounds_exhaustive(three_var, PAIR_12).lower[a]
            assert lower_bound_roof_dual(three_var, PAIR_12, a) == pytest.approx(exact)


class TestRoofDual:
    def test_against_lp_relaxation(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            nf = int(rng.integers(2, 9))
            a = rng.uniform(-1, 1, nf)
            b = np.triu(rng.uniform(-1, 1, (nf, nf)), 1)
            b[rng.random((nf, nf)) < 0.3] = 0
            scale = np.abs(a).sum() + np.abs(b).sum()
            assert roof_dual(a, b) == pytest.approx(linearization_lp(a, b), abs=1e-6 * scale)

    def test_exact_on_submodular(self):
        # nonpositive couplings: the roof dual equals the true minimum
        rng = np.random.default_rng(8)
        for _ in range(40):
            n = 7
            m = np.triu(-rng.uniform(0, 1, (n, n)), 1)
            np.fill_diagonal(m, rng.uniform(-1, 1, n))
            a, b = np.diag(m).copy(), np.triu(m, 1)
            exact = brute_force_minima(QuboInstance(m)).min_value
            assert roof_dual(a, b) == pytest.approx(exact, abs=1e-6 * np.abs(m).sum())

    def test_valid_lower_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            q = random_upper(rng, 9, -1, 1)
            for k, l in [(0, 0), (2, 5), (7, 8)]:
                p = PinnedPair(k, l)
                E = all_energies(q)
                for a in p.assignments():
                    assert lower_bound_roof_dual(q, p, a) <= E[subspace_mask(9, p, a)].min() + energy_tolerance(q)

    def test_large_coefficients(self):
        # capacities must stay inside int32 regardless of coefficient scale
        rng = np.random.default_rng(10)
        a = rng.uniform(-1e9, 1e9, 6)
        b = np.triu(rng.uniform(-1e9, 1e9, (6, 6)), 1)
        assert roof_dual(a, b) == pytest.approx(linearization_lp(a, b), rel=1e-6)

    def test_empty_and_constant(self):
        assert roof_dual(np.zeros(0), np.zeros((0, 0))) == 0
        assert roof_dual(np.array([1.0, 2.0]), np.zeros((2, 2))) == 0
        assert roof_dual(np.array([-1.0, 2.0]), np.zeros((2, 2))) == -1

    def test_reduction_preserves_energies(self):
        q = random_upper(np.random.default_rng(4), 5)
        p = PinnedPair(1, 3)
        const, lin, quad, free = reduce_pinned(q, p, (1, 0))
        for bits in itertools.product((0, 1), repeat=3):
            x = np.zeros(5, dtype=int)
            x[free] = bits
            x[1], x[3] = 1, 0
            y = np.array(bits, dtype=float)
            assert const + lin @ y + y @ quad @ y == pytest.approx(energy(q, x))


class TestHeuristicBounds:
    def test_sandwich(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            q = random_upper(rng, 8)
            E, tol = all_energies(q), energy_tolerance(q)
            for k, l in upper_positions(8)[::3]:
                p = PinnedPair(k, l)
                for a in p.assignments():
                    exact = E[subspace_mask(8, p, a)].min()
                    ns = lower_bound_negative_sum(q, p, a)
                    rd = lower_bound_roof_dual(q, p, a)
                    ls = upper_bound_local_search(q, p, a, seed=3)
                    zv = upper_bound_zero_vector(q, p, a)
                    assert ns <= rd + tol and rd <= exact + tol
                    assert exact <= ls + tol and ls <= zv + tol

    def test_local_search_deterministic(self):
        q = random_upper(np.random.default_rng(13), 10)
        p = PinnedPair(2, 4)
        assert upper_bound_local_search(q, p, (1, 0), seed=5) == upper_bound_local_search(q, p, (1, 0), seed=5)

    def test_negative_sum_of_nonnegative_matrix(self):
        q = QuboInstance(np.triu(np.ones((4, 4))))
        assert lower_bound_negative_sum(q, PinnedPair(0, 1), (1, 1)) == 0

    def test_method_dispatch(self):
        q = random_upper(np.random.default_rng(14), 13)
        assert BoundMethod.AUTO.resolve(12) is BoundMethod.EXHAUSTIVE
        assert BoundMethod.AUTO.resolve(13) is BoundMethod.HEURISTIC_ROOF_DUAL
        b = subspace_bounds(q, PinnedPair(0, 5))
        assert all("roofdual" in m for m in b.method.values())
        assert b.to_json_obj()["pair"] == [0, 5]

    def test_roof_dual_not_weaker_than_negative_sum(self):
        q = random_upper(np.random.default_rng(15), 10)
        p = PinnedPair(3, 3)
        hr = subspace_bounds(q, p, "roofdual")
        hn = subspace_bounds(q, p, "heuristic")
        for a in p.assignments():
            assert hr.lower[a] >= hn.lower[a]


class TestInterval:
    def test_interval_keeps_an_optimum(self):
        """Inside the interval the minimizer set cannot grow; at the ends one optimum survives."""
        rng = np.random.default_rng(16)
        for _ in range(40):
            q = random_upper(rng, 6)
            ref = brute_force_minima(q)
            for k, l in upper_positions(6)[::4]:
                p = PinnedPair(k, l)
                iv = preservation_interval(subspace_bounds_exhaustive(q, p))
                for w in (iv.lo, iv.hi):
                    new = brute_force_minima(q.add(k, l, w))
                    assert new.as_set() & ref.as_set()
                for w in (0.5 * iv.lo, 0.5 * iv.hi):
                    new = brute_force_minima(q.add(k, l, w))
                    assert new.as_set() <= ref.as_set()

    def test_diagonal_formula(self):
        b = SubspaceBoundSet(PinnedPair(0, 0), {(0,): -1.0, (1,): -3.0}, {(0,): -0.5, (1,): -2.0},
                             {(0,): "x", (1,): "x"})
        iv = preservation_interval(b)
        assert iv.lo == 0 and iv.hi == pytest.approx(1.0)

    def test_invariants(self):
        with pytest.raises(QuboError):
            PreservationInterval(0.1, 1.0)
        with pytest.raises(QuboError):
            SubspaceBoundSet(PinnedPair(0, 0), {(0,): 1.0, (1,): 0.0}, {(0,): 0.0, (1,): 0.0}, {})
        assert 0.5 in PreservationInterval(-1, 1)
