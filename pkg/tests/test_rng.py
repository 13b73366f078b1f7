"""Reproducibility and distributional checks for the counter-based RNG."""

import numpy as np
import pytest

from almkit.numkit import Rng, sample_poisson


class TestStreams:
    def test_equal_seeds_equal_streams(self):
        a, b = Rng(12345), Rng(12345)
        assert np.array_equal(a.uniforms(1_000_000), b.uniforms(1_000_000))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).uniforms(64), Rng(2).uniforms(64))

    def test_batching_does_not_change_stream(self):
        a, b = Rng(7), Rng(7)
        chunks = np.concatenate([a.uniforms(3), a.uniforms(5), a.uniforms(2)])
        assert np.array_equal(chunks, b.uniforms(10))

    def test_uniform_range_and_mean(self):
        u = Rng(3).uniforms(100_000)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 4.0 * np.sqrt(1.0 / 12.0 / 100_000)

    def test_spawn_reproducible_and_distinct(self):
        parent = Rng(99)
        c1 = parent.spawn(0).uniforms(100)
        c2 = Rng(99).spawn(0).uniforms(100)
        assert np.array_equal(c1, c2)
        assert not np.array_equal(c1, Rng(99).spawn(1).uniforms(100))

    def test_normals_moments(self):
        z = Rng(11).normals(200_000)
        assert abs(z.mean()) < 4.0 / np.sqrt(200_000)
        assert abs(z.var() - 1.0) < 4.0 * np.sqrt(2.0 / 200_000)

    def test_subset_without_replacement(self):
        rng = Rng(5)
        for _ in range(50):
            s = rng.subset(20, 7)
            assert len(s) == 7
            assert len(np.unique(s)) == 7
            assert s.min() >= 0 and s.max() < 20

    def test_subset_uniformity(self):
        # each element of a pool of 4 should appear in a subset of size 2
        # with probability 1/2
        rng = Rng(8)
        hits = np.zeros(4)
        reps = 20_000
        for _ in range(reps):
            hits[rng.subset(4, 2)] += 1
        freq = hits / reps
        assert np.all(np.abs(freq - 0.5) < 4.0 * np.sqrt(0.25 / reps))


class TestPoisson:
    def test_mean_zero_always_zero(self):
        rng = Rng(0)
        assert all(sample_poisson(rng, 0.0) == 0 for _ in range(100))
        assert np.all(rng.poissons(np.zeros(1000)) == 0)

    def test_mean_five_clt(self):
        # CLT bound: empirical mean of 1e5 draws within 4*sqrt(5/1e5)
        draws = Rng(42).poissons(np.full(100_000, 5.0))
        assert abs(draws.mean() - 5.0) <= 4.0 * np.sqrt(5.0 / 100_000)

    def test_mean_200_variance(self):
        # splitting path: variance of Poisson(200) within 5 percent
        draws = Rng(43).poissons(np.full(100_000, 200.0))
        assert abs(draws.var() - 200.0) <= 0.05 * 200.0
        assert abs(draws.mean() - 200.0) <= 4.0 * np.sqrt(200.0 / 100_000)

    def test_small_mean_pmf_against_exact(self):
        # frequency of k=0 for mean 2 should match exp(-2)
        draws = Rng(44).poissons(np.full(200_000, 2.0))
        p0 = np.mean(draws == 0)
        exact = np.exp(-2.0)
        assert abs(p0 - exact) < 4.0 * np.sqrt(exact * (1 - exact) / 200_000)

    def test_rejects_bad_means(self):
        rng = Rng(1)
        with pytest.raises(ValueError):
            sample_poisson(rng, -1.0)
        with pytest.raises(ValueError):
            sample_poisson(rng, float("nan"))
        with pytest.raises(ValueError):
            sample_poisson(rng, float("inf"))

    def test_reproducible(self):
        means = Rng(2).uniforms(500) * 60.0
        assert np.array_equal(Rng(9).poissons(means), Rng(9).poissons(means))
