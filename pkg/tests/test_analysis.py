"""Tests for coherence diagnostics."""

import math

import numpy as np
import pytest

from skewrank.aggregation import SampleSet
from skewrank.analysis import coherence, sample_graph_components
from skewrank.errors import DomainError
from skewrank.scoring import ScoreVector


class TestCoherence:
    """Test cases for coherence."""

    def test_two_items(self):
        """s = (-1, 1): theta = 1/2, rho = sqrt(2), nu = 4."""
        report = coherence(np.array([-1.0, 1.0]))
        assert report.theta == pytest.approx(0.5)
        assert report.rho == pytest.approx(math.sqrt(2.0))
        assert report.nu == pytest.approx(4.0)
        assert report.sample_bound == pytest.approx(2 * 2 * 4.0 * 2.0 * math.log(2) ** 2)

    def test_scale_invariant(self):
        s = np.array([-3.0, -1.0, 0.5, 3.5])
        base = coherence(s)
        scaled = coherence(ScoreVector(7.5 * s))
        assert scaled.nu == pytest.approx(base.nu)
        assert scaled.theta == pytest.approx(base.theta)
        assert scaled.rho == pytest.approx(base.rho)

    def test_scale_invariant_random_vectors(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            s = rng.standard_normal(int(rng.integers(2, 60)))
            s -= s.mean()
            gamma = rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-3, 3)
            base, scaled = coherence(s), coherence(gamma * s)
            assert scaled.theta == pytest.approx(base.theta, rel=1e-12)
            assert scaled.rho == pytest.approx(base.rho, rel=1e-12)
            assert scaled.nu == pytest.approx(base.nu, rel=1e-12)

    def test_uniform_spacing(self):
        """theta ~ 3/n and rho ~ sqrt(12/n) for evenly spaced scores."""
        n = 100
        report = coherence(np.linspace(-1.0, 1.0, n))
        assert report.theta == pytest.approx(3 * (n - 1) / (n * (n + 1)))
        assert report.rho == pytest.approx(math.sqrt(12 * (n - 1) / (n * (n + 1))))
        assert report.theta == pytest.approx(3 / n, rel=0.05)
        assert report.rho == pytest.approx(math.sqrt(12 / n), rel=0.05)
        assert report.nu == pytest.approx(max((n * report.theta + 1) / 4, n * report.rho**2))
        assert report.nu < 13

    def test_single_outlier(self):
        """One score far above the rest drives theta toward 1."""
        n = 100
        rng = np.random.default_rng(5)
        s = np.concatenate([[1e4], rng.uniform(size=n - 1)])
        s -= s.mean()
        report = coherence(s)
        assert report.theta > 0.98
        assert report.nu >= (n + 1) / 4 - 1

    def test_nu_lower_bounds(self):
        """nu is at least (n theta + 1) / 4 and at least n rho^2."""
        rng = np.random.default_rng(0)
        for _ in range(50):
            s = rng.standard_normal(int(rng.integers(2, 40)))
            s -= s.mean()
            report = coherence(s)
            assert report.nu >= (report.n * report.theta + 1) / 4
            assert report.nu >= report.n * report.rho**2 - 1e-12

    def test_beta_scales_bound(self):
        s = np.array([-1.0, 0.0, 1.0])
        assert coherence(s, beta=3.0).sample_bound == pytest.approx(2 * coherence(s, beta=1.0).sample_bound)

    def test_to_dict(self):
        record = coherence(np.array([-1.0, 1.0])).to_dict()
        assert record["log_base"] == "e"
        assert set(record) >= {"n", "theta", "rho", "nu", "beta", "sample_bound"}

    def test_zero_vector(self):
        with pytest.raises(DomainError, match="zero score vector"):
            coherence(np.zeros(3))

    def test_not_centered(self):
        with pytest.raises(DomainError, match="centered"):
            coherence(np.array([1.0, 2.0, 3.0]))

    @pytest.mark.parametrize("beta", [0.0, -1.0])
    def test_beta_positive(self, beta):
        with pytest.raises(DomainError, match="beta"):
            coherence(np.array([-1.0, 1.0]), beta=beta)


class TestSampleGraphComponents:
    """Test cases for sample_graph_components."""

    def test_connected(self):
        samples = SampleSet.from_upper(4, [0, 1, 2], [1, 2, 3], [1.0, 1.0, 1.0])
        assert sample_graph_components(samples) == 1

    def test_two_components_and_isolated_item(self):
        samples = SampleSet.from_upper(5, [0, 2], [1, 3], [1.0, -2.0])
        assert sample_graph_components(samples) == 3
