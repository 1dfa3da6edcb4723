"""
Tests for the ADF and ARCH-LM tests
"""

import math

import numpy as np
import pytest

from analysis.hypothesis_tests import (
    Conclusion,
    adf_test,
    arch_lm_test,
    mackinnon_critical_values,
    mackinnon_p_value,
    schwert_max_lag,
)
from utils.errors import InsufficientDataError, InvalidParameterError, ZeroVarianceError


def simulate_garch(rng, n, omega=0.05, alpha=0.3, beta=0.6):
    e = np.empty(n)
    variance = omega / (1 - alpha - beta)
    for t in range(n):
        e[t] = math.sqrt(variance) * rng.standard_normal()
        variance = omega + alpha * e[t] ** 2 + beta * variance
    return e


class TestMacKinnon:
    def test_very_negative_statistic(self):
        p = mackinnon_p_value(-10.0, "c")
        assert 0 < p < 1e-15

    def test_clamping(self):
        assert mackinnon_p_value(3.0, "c") == 1.0
        assert mackinnon_p_value(math.inf, "n") == 1.0
        assert mackinnon_p_value(-30.0, "c") == 1e-20

    def test_monotone(self):
        values = [mackinnon_p_value(s, "c") for s in (-4.0, -3.0, -2.0, -1.0, 0.0)]
        assert values == sorted(values)

    def test_five_percent_critical_value(self):
        assert mackinnon_p_value(-2.86154, "c") == pytest.approx(0.05, abs=0.005)

    def test_critical_values_approach_asymptotic(self):
        values = mackinnon_critical_values(100_000, "c")
        assert values["5%"] == pytest.approx(-2.86154, abs=1e-3)
        assert values["1%"] < values["5%"] < values["10%"]

    def test_unknown_regression(self):
        with pytest.raises(InvalidParameterError):
            mackinnon_p_value(-2.0, "x")

    def test_schwert_rule(self):
        assert schwert_max_lag(100) == 12
        assert schwert_max_lag(500) == 17


class TestAdf:
    def test_rejects_white_noise(self):
        rng = np.random.default_rng(100)
        rejections = sum(
            adf_test(rng.standard_normal(500)).p_value < 0.01 for _ in range(100)
        )
        assert rejections >= 95

    def test_keeps_random_walk(self):
        rng = np.random.default_rng(101)
        kept = sum(
            adf_test(np.cumsum(rng.standard_normal(500))).p_value > 0.10 for _ in range(100)
        )
        assert kept >= 80

    def test_result_fields(self):
        rng = np.random.default_rng(102)
        result = adf_test(rng.standard_normal(200), regression="ct")
        assert result.name == "ADF"
        assert result.regression == "ct"
        assert set(result.critical_values) == {"1%", "5%", "10%"}
        assert result.nobs == 200 - 1 - result.lags_used
        assert result.conclusion is Conclusion.REJECT_H0
        assert result.rejected

    def test_fixed_lag(self):
        rng = np.random.default_rng(103)
        result = adf_test(rng.standard_normal(100), fixed_lag=2)
        assert result.lags_used == 2
        assert result.nobs == 97

    def test_fixed_lag_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            adf_test(np.random.default_rng(1).standard_normal(40), fixed_lag=30)

    def test_short_series(self):
        with pytest.raises(InsufficientDataError):
            adf_test(np.arange(10.0))

    def test_constant_series(self):
        with pytest.raises(ZeroVarianceError):
            adf_test(np.ones(50))

    def test_to_dict(self):
        data = adf_test(np.random.default_rng(104).standard_normal(60)).to_dict()
        assert data["name"] == "ADF"
        assert data["conclusion"] in ("REJECT_H0", "FAIL_TO_REJECT")
        assert "critical_values" in data


class TestArchLm:
    def test_detects_garch(self):
        rng = np.random.default_rng(200)
        rejections = sum(
            arch_lm_test(simulate_garch(rng, 500), lags=5).rejected for _ in range(100)
        )
        assert rejections >= 90

    def test_size_on_gaussian_noise(self):
        rng = np.random.default_rng(201)
        rejections = sum(
            arch_lm_test(rng.standard_normal(500), lags=5).rejected for _ in range(100)
        )
        assert rejections <= 10

    def test_statistic_definition(self):
        rng = np.random.default_rng(202)
        e = simulate_garch(rng, 300)
        result = arch_lm_test(e, lags=2)
        assert result.nobs == 298
        assert result.lags_used == 2
        assert 0 <= result.p_value <= 1

    def test_constant_squares_are_degenerate(self):
        result = arch_lm_test(np.array([1.0, -1.0] * 20), lags=3)
        assert result.statistic == 0.0
        assert result.p_value == 1.0
        assert result.conclusion is Conclusion.FAIL_TO_REJECT

    def test_too_few_residuals(self):
        with pytest.raises(InsufficientDataError):
            arch_lm_test(np.ones(6), lags=5)

    def test_bad_significance(self):
        with pytest.raises(InvalidParameterError):
            arch_lm_test(np.ones(50), significance=1.5)
