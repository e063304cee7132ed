from __future__ import annotations

import math

import numpy as np
import pytest

from qubocompress.core import brute_force_minima, diff_stats, energies, energy
from qubocompress.errors import QuboError
from qubocompress.generators import (
    SubsetSumProblem,
    gen_binclustering,
    gen_subsetsum,
    gen_uniform,
    subsetsum_to_qubo,
    two_means_qubo,
)


class TestUniform:
    def test_range_and_shape(self):
        q = gen_uniform(10, seed=1)
        up = q.matrix[np.triu_indices(10)]
        assert np.all((up >= -0.5) & (up <= 0.5))
        assert np.all(np.tril(q.matrix, -1) == 0)

    def test_seeded(self):
        assert gen_uniform(6, 3) == gen_uniform(6, 3)
        assert gen_uniform(6, 3) != gen_uniform(6, 4)

    def test_mean(self):
        q = gen_uniform(450, seed=0)
        up = q.matrix[np.triu_indices(450)]
        assert up.size > 100_000
        assert abs(up.mean()) < 0.01


class TestSubsetSum:
    def test_hand_example(self):
        q = subsetsum_to_qubo(SubsetSumProblem((3, 5), 8, frozenset({0, 1})))
        assert np.array_equal(q.matrix, [[-39, 30], [0, -55]])
        assert energy(q, [1, 1]) == -64

    def test_zero_problem(self):
        q = subsetsum_to_qubo(SubsetSumProblem((0, 0, 0), 0, frozenset()))
        assert np.all(q.matrix == 0)

    def test_identity(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            p = gen_subsetsum(12, seed)
            q = subsetsum_to_qubo(p)
            xs = rng.integers(0, 2, (50, 12))
            a = np.array(p.values)
            expected = (xs @ a - p.target) ** 2 - p.target ** 2
            assert np.array_equal(energies(q, xs), expected.astype(float))

    def test_planted_is_global_minimum(self):
        for seed in range(15):
            p = gen_subsetsum(12, seed)
            q = subsetsum_to_qubo(p)
            x = p.planted_vector()
            assert energy(q, x) == -p.target ** 2
            assert brute_force_minima(q).min_value == -p.target ** 2

    def test_subset_size_support(self):
        for n in (5, 10, 14, 20):
            for seed in range(30):
                k = len(gen_subsetsum(n, seed).planted)
                assert max(1, math.ceil(n / 5) - 1) <= k <= min(n - 1, math.floor(4 * n / 5) + 1)

    def test_seeded_and_json(self):
        p = gen_subsetsum(10, 5)
        assert p == gen_subsetsum(10, 5)
        assert SubsetSumProblem.from_json(p.to_json()) == p

    def test_invalid(self):
        with pytest.raises(QuboError):
            SubsetSumProblem((1, 2), 4, frozenset({0}))
        with pytest.raises(QuboError):
            gen_subsetsum(1)


class TestBinClustering:
    def test_size(self):
        ds, q = gen_binclustering(0)
        assert q.n == 19
        assert len(ds.points) == 20
        assert ds.outlier_indices == frozenset({0, 18})

    def test_recovers_planted_partition_without_outliers(self):
        for seed in range(3):
            ds, q = gen_binclustering(seed, outliers=False)
            r = brute_force_minima(q)
            x = np.append(r.minimizers[0], 0)  # the dropped last point sits in class 0
            assert len(r) == 1
            assert np.all(x[:10] == 1) and np.all(x[10:] == 0)

    def test_outliers_raise_dynamic_range(self):
        for seed in range(5):
            assert diff_stats(gen_binclustering(seed)[1]).dr_bits > \
                diff_stats(gen_binclustering(seed, outliers=False)[1]).dr_bits

    def test_encoding_matches_objective(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((6, 2))
        q = two_means_qubo(pts, pinned=None)
        c = pts - pts.mean(axis=0)
        for bits in rng.integers(0, 2, (20, 6)):
            s = 2 * bits - 1
            obj = -np.sum((s @ c) ** 2)
            const = -np.sum(c.sum(axis=0) ** 2)
            assert energy(q, bits) == pytest.approx(obj - const)

    def test_dataset_csv(self):
        ds, _ = gen_binclustering(2)
        lines = ds.to_csv().splitlines()
        assert lines[0] == "x,y,outlier"
        assert len(lines) == 21
        assert lines[1].endswith(",1")
