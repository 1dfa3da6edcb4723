"""
Tests for the LAD solvers and the pairs bootstrap
"""

from itertools import combinations

import numpy as np
import pytest

from analysis.lad import bootstrap_lad, lad_fit, lad_objective, weighted_median
from utils.errors import InsufficientDataError, InvalidParameterError, ZeroVarianceError


def brute_force_objective(x, y):
    """Smallest objective over every line through two data points"""
    best = np.inf
    for i, j in combinations(range(len(x)), 2):
        if x[i] == x[j]:
            continue
        slope = (y[j] - y[i]) / (x[j] - x[i])
        best = min(best, lad_objective(y[i] - slope * x[i], slope, x, y))
    return best


class TestWeightedMedian:
    def test_equal_weights_gives_lower_median(self):
        assert weighted_median(np.array([4.0, 1.0, 3.0, 2.0]), np.ones(4)) == 2.0

    def test_heavy_weight_wins(self):
        assert weighted_median(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1, 1, 1, 5.0])) == 4.0


class TestLadFit:
    def test_matches_enumeration(self):
        rng = np.random.default_rng(71)
        for _ in range(50):
            n = int(rng.integers(3, 13))
            x = rng.standard_normal(n)
            y = 0.5 - 1.5 * x + rng.standard_t(2, n)
            fit = lad_fit(x, y)
            assert fit.objective == pytest.approx(brute_force_objective(x, y), rel=1e-9, abs=1e-12)
            assert fit.objective == pytest.approx(lad_objective(fit.intercept, fit.slope, x, y))

    def test_exact_line_recovered(self):
        x = np.arange(10.0)
        fit = lad_fit(x, 2.0 - 0.5 * x)
        assert fit.slope == pytest.approx(-0.5)
        assert fit.intercept == pytest.approx(2.0)
        assert fit.objective == pytest.approx(0.0, abs=1e-12)

    def test_resists_outliers(self):
        rng = np.random.default_rng(72)
        x = rng.uniform(0, 10, 100)
        y = 1.0 + 2.0 * x + 0.1 * rng.standard_normal(100)
        y[:10] += 500.0
        fit = lad_fit(x, y)
        assert fit.slope == pytest.approx(2.0, abs=0.1)

    def test_irls_path_reaches_same_optimum(self):
        rng = np.random.default_rng(73)
        x = rng.standard_normal(200)
        y = 3.0 + x + rng.laplace(size=200)
        exact = lad_fit(x, y, "exact")
        irls = lad_fit(x, y, "irls")
        assert irls.method == "irls"
        assert irls.objective == pytest.approx(exact.objective, rel=1e-9)

    def test_large_samples_use_irls(self):
        rng = np.random.default_rng(74)
        x = rng.standard_normal(600)
        assert lad_fit(x, x + rng.standard_normal(600)).method == "irls"

    def test_shifted_regressor_keeps_slope(self):
        rng = np.random.default_rng(75)
        x = rng.uniform(2, 4, 80)
        y = 1.0 - 0.8 * x + 0.2 * rng.standard_normal(80)
        base = lad_fit(x, y)
        shifted = lad_fit(x + np.log(100.0), y)
        assert shifted.slope == pytest.approx(base.slope, rel=1e-10)

    def test_constant_regressor(self):
        with pytest.raises(ZeroVarianceError):
            lad_fit(np.ones(5), np.arange(5.0))

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            lad_fit(np.array([1.0]), np.array([2.0]))

    def test_unknown_method(self):
        with pytest.raises(InvalidParameterError):
            lad_fit(np.arange(5.0), np.arange(5.0), "simplex")


class TestBootstrap:
    def sample(self):
        rng = np.random.default_rng(76)
        x = rng.standard_normal(60)
        return x, 1.0 + 0.5 * x + rng.standard_normal(60)

    def test_same_seed_same_errors(self):
        x, y = self.sample()
        first = bootstrap_lad(x, y, reps=49, seed=42)
        second = bootstrap_lad(x, y, reps=49, seed=42)
        assert first == second
        assert first.valid_reps == 49

    def test_different_seed_different_errors(self):
        x, y = self.sample()
        assert bootstrap_lad(x, y, 49, seed=1) != bootstrap_lad(x, y, 49, seed=2)

    def test_errors_positive(self):
        x, y = self.sample()
        se0, se1 = bootstrap_lad(x, y, 49, seed=3).standard_errors
        assert 0 < se0 < 1
        assert 0 < se1 < 1

    def test_needs_two_reps(self):
        x, y = self.sample()
        with pytest.raises(InvalidParameterError):
            bootstrap_lad(x, y, reps=1, seed=0)
