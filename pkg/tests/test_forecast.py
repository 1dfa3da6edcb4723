"""
Tests for the AR mean model, GARCH(1,1) estimation and the rolling backtest
"""

import math

import numpy as np
import pandas as pd
import pytest
from conftest import check_golden, weekly_returns
from scipy import signal

from analysis.forecast import (
    FALLBACK_VARIANCE_FLOOR,
    ArModel,
    ForecastStep,
    GarchModel,
    RollingForecastResult,
    ar_min_length,
    estimate_garch,
    evaluate,
    fit_ar,
    fit_garch,
    garch_from_unconstrained,
    garch_nll,
    garch_to_unconstrained,
    rolling_forecast,
)
from market_data.calendar import IsoWeek
from utils.errors import (
    InsufficientDataError,
    InvalidParameterError,
    RankDeficientError,
    ZeroVarianceError,
)


def simulate_garch(rng, n, omega, alpha, beta):
    e = np.empty(n)
    variance = omega / (1 - alpha - beta)
    for t in range(n):
        e[t] = math.sqrt(variance) * rng.standard_normal()
        variance = omega + alpha * e[t] ** 2 + beta * variance
    return e


class TestArModel:
    def test_recovers_ar3(self):
        recovered = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            noise = rng.standard_normal(2500)
            x = signal.lfilter([1.0], [1.0, -0.3, 0.2, -0.1], noise)[500:]
            model = fit_ar(x, 3)
            errors = np.abs(model.coefficients - [0.3, -0.2, 0.1])
            recovered += bool(np.all(errors <= 0.05))
        # each seed is an independent n=2000 draw; sampling error is about 0.022
        assert recovered >= 17

    def test_ar1_data_fitted_at_order_3(self):
        rng = np.random.default_rng(32)
        x = signal.lfilter([1.0], [1.0, -0.5], rng.standard_normal(5500))[500:]
        model = fit_ar(x, 3)
        assert model.coefficients[0] == pytest.approx(0.5, abs=0.05)
        np.testing.assert_allclose(model.coefficients[1:], [0.0, 0.0], atol=0.05)
        assert len(model.residuals) == len(x) - 3

    def test_nonzero_constant_window_is_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            fit_ar(np.full(40, 0.01), 3)

    def test_forecast_uses_latest_values_first(self):
        model = ArModel(2, 0.1, np.array([0.5, -0.25]), np.zeros(1))
        assert model.forecast([1.0, 2.0, 4.0]) == pytest.approx(0.1 + 0.5 * 4.0 - 0.25 * 2.0)

    def test_forecast_needs_enough_history(self):
        model = ArModel(3, 0.0, np.zeros(3), np.zeros(1))
        with pytest.raises(InsufficientDataError):
            model.forecast([1.0, 2.0])

    def test_minimum_length(self):
        assert ar_min_length(3) == 30
        assert ar_min_length(1) == 11
        with pytest.raises(InsufficientDataError):
            fit_ar(np.arange(29.0), 3)

    def test_all_zero_window_is_degenerate(self):
        model = fit_ar(np.zeros(40), 3)
        assert model.degenerate
        assert model.forecast(np.zeros(40)) == 0.0

    def test_order_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            fit_ar(np.arange(40.0), 0)


class TestGarch:
    def test_recovers_parameters(self):
        rng = np.random.default_rng(41)
        e = simulate_garch(rng, 5000, omega=0.05, alpha=0.10, beta=0.85)
        estimate = estimate_garch(e)
        model = estimate.model
        assert model.omega == pytest.approx(0.05, abs=0.05)
        assert model.alpha == pytest.approx(0.10, abs=0.05)
        assert model.beta == pytest.approx(0.85, abs=0.08)
        assert model.persistence < 1
        assert len(estimate.attempts) == 3

    def test_fit_is_stationary_on_noise(self):
        rng = np.random.default_rng(42)
        model = fit_garch(0.02 * rng.standard_normal(200))
        assert model.alpha >= 0 and model.beta >= 0
        assert model.persistence < 1

    def test_no_arch_effect_found_in_iid_noise(self):
        rng = np.random.default_rng(45)
        e = 0.02 * rng.standard_normal(5000)
        model = fit_garch(e)
        assert model.alpha <= 0.05
        assert model.unconditional_variance == pytest.approx(np.var(e), rel=0.15)

    def test_variance_recursion(self):
        model = GarchModel(0.1, 0.2, 0.7, 1.5)
        e = np.array([0.5, -1.0, 2.0, 0.0])
        expected = [1.5]
        for t in range(1, len(e)):
            expected.append(0.1 + 0.2 * e[t - 1] ** 2 + 0.7 * expected[-1])
        np.testing.assert_allclose(model.variances(e), expected, rtol=1e-12)
        assert model.forecast_variance(e) == pytest.approx(0.1 + 0.7 * expected[-1])

    def test_likelihood(self):
        model = GarchModel(0.1, 0.2, 0.7, 1.0)
        e = np.array([1.0])
        assert garch_nll(model, e) == pytest.approx(0.5 * (math.log(2 * math.pi) + 1.0))

    def test_likelihood_without_dynamics_is_constant_variance(self):
        e = np.array([0.3, -1.2, 0.7, 2.0])
        model = GarchModel(0.5, 0.0, 0.0, 0.5)
        np.testing.assert_array_equal(model.variances(e), np.full(4, 0.5))
        expected = 0.5 * sum(math.log(2 * math.pi * 0.5) + x**2 / 0.5 for x in e)
        assert garch_nll(model, e) == pytest.approx(expected, rel=1e-12)

    def test_likelihood_three_steps_by_hand(self):
        model = GarchModel(0.1, 0.2, 0.7, 1.0)
        e = [0.5, -1.0, 2.0]
        s1 = 1.0
        s2 = 0.1 + 0.2 * 0.25 + 0.7 * s1
        s3 = 0.1 + 0.2 * 1.0 + 0.7 * s2
        expected = 0.5 * (
            math.log(2 * math.pi * s1)
            + 0.25 / s1
            + math.log(2 * math.pi * s2)
            + 1.0 / s2
            + math.log(2 * math.pi * s3)
            + 4.0 / s3
        )
        assert garch_nll(model, np.array(e)) == pytest.approx(expected, rel=1e-12)

    def test_likelihood_scaling_shifts_by_n_log_2(self):
        rng = np.random.default_rng(44)
        e = rng.standard_normal(250)
        base = garch_nll(GarchModel(0.1, 0.15, 0.8, 1.3), e)
        scaled = garch_nll(GarchModel(0.4, 0.15, 0.8, 5.2), 2.0 * e)
        assert scaled - base == pytest.approx(250 * math.log(2.0), rel=1e-10)

    def test_reparameterization_round_trip(self):
        u = garch_to_unconstrained(0.1, 0.2, 0.7)
        np.testing.assert_allclose(garch_from_unconstrained(u), (0.1, 0.2, 0.7), rtol=1e-12)

    def test_any_moderate_point_is_admissible(self):
        rng = np.random.default_rng(43)
        for u in rng.uniform(-10, 10, size=(200, 3)):
            omega, alpha, beta = garch_from_unconstrained(u)
            assert omega > 0 and alpha >= 0 and beta >= 0
            assert alpha + beta < 1

    def test_nonstationary_parameters_rejected(self):
        with pytest.raises(InvalidParameterError):
            GarchModel(0.1, 0.5, 0.5, 1.0)

    def test_short_residuals(self):
        with pytest.raises(InsufficientDataError):
            estimate_garch(np.ones(20))

    def test_constant_residuals(self):
        with pytest.raises(ZeroVarianceError):
            estimate_garch(np.zeros(60))

    def test_unknown_variance_init(self):
        with pytest.raises(InvalidParameterError):
            estimate_garch(np.random.default_rng(1).standard_normal(60), "zero")


class TestRollingForecast:
    def test_step_count(self):
        rng = np.random.default_rng(51)
        series = weekly_returns(0.03 * rng.standard_normal(160))
        result = rolling_forecast(series, window=104)
        assert len(result) == 56
        assert [s.week for s in result.steps] == list(series.weeks[104:])
        np.testing.assert_array_equal([s.actual for s in result.steps], series.values[104:])

    def test_deterministic(self):
        rng = np.random.default_rng(52)
        series = weekly_returns(0.03 * rng.standard_normal(70))
        first = rolling_forecast(series, window=60).to_frame()
        second = rolling_forecast(series, window=60).to_frame()
        pd.testing.assert_frame_equal(first, second)

    def test_homoskedastic_variance_near_true_variance(self):
        rng = np.random.default_rng(53)
        series = weekly_returns(0.02 * rng.standard_normal(204))
        result = rolling_forecast(series, window=104)
        variances = np.array([s.forecast_variance for s in result.steps])
        close = np.abs(variances / 0.02**2 - 1) <= 0.3
        assert close.mean() >= 0.9

    def test_constant_window_falls_back_and_flags(self):
        rng = np.random.default_rng(55)
        values = np.concatenate([np.full(60, 0.01), 0.03 * rng.standard_normal(60)])
        result = rolling_forecast(weekly_returns(values), window=52)
        assert len(result) == 68
        # the first nine windows hold nothing but the constant
        for step in result.steps[:9]:
            assert step.flagged
            assert step.forecast_mean == pytest.approx(0.01)
            assert step.forecast_variance == FALLBACK_VARIANCE_FLOOR
        assert all(s.forecast_variance > 0 for s in result.steps)
        assert result.steps[-1].forecast_variance > FALLBACK_VARIANCE_FLOOR

    def test_golden_ar_garch_backtest(self):
        rng = np.random.default_rng(56)
        shocks = simulate_garch(rng, 660, omega=0.0001, alpha=0.10, beta=0.80)
        values = signal.lfilter([1.0], [1.0, -0.2], shocks)[500:]
        result = rolling_forecast(weekly_returns(values), window=104)
        assert len(result) == 56
        text = result.to_frame().to_csv(index=False, float_format="%.10g")
        check_golden("rolling_forecast_160_104.csv", text)

    def test_failed_garch_falls_back_and_flags(self):
        series = weekly_returns(np.zeros(106))
        result = rolling_forecast(series, window=104)
        assert result.flagged_count == 2
        assert all(s.forecast_variance == FALLBACK_VARIANCE_FLOOR for s in result.steps)
        assert all(s.forecast_mean == 0.0 for s in result.steps)

    def test_frame_columns(self):
        rng = np.random.default_rng(54)
        frame = rolling_forecast(weekly_returns(rng.standard_normal(62)), window=60).to_frame()
        assert list(frame.columns) == [
            "week",
            "mean",
            "variance",
            "actual",
            "band_lo",
            "band_hi",
            "flagged",
        ]
        assert (frame["band_lo"] < frame["band_hi"]).all()

    def test_window_too_small(self):
        with pytest.raises(InvalidParameterError):
            rolling_forecast(weekly_returns(np.ones(100)), window=40)

    def test_series_not_longer_than_window(self):
        with pytest.raises(InsufficientDataError):
            rolling_forecast(weekly_returns(np.ones(60)), window=60)


class TestMetrics:
    def hand_built(self):
        means = [0.01, -0.02, 0.0, 0.03, -0.01]
        variances = [0.0004, 0.0001, 0.0009, 0.0004, 0.0016]
        actuals = [0.02, 0.01, 0.0, -0.01, -0.06]
        steps = tuple(
            ForecastStep(IsoWeek(2015, i + 1), m, v, a)
            for i, (m, v, a) in enumerate(zip(means, variances, actuals))
        )
        return RollingForecastResult(steps, window=104)

    def test_counted_values(self):
        metrics = evaluate(self.hand_built())
        assert metrics.mse == pytest.approx(0.0051 / 5, rel=1e-12)
        assert metrics.mae == pytest.approx(0.13 / 5, rel=1e-12)
        assert metrics.directional_accuracy == 0.6
        assert metrics.hit_rate == 0.4
        assert metrics.n == 5

    def test_rmse_squared_is_mse(self):
        metrics = evaluate(self.hand_built())
        assert metrics.rmse**2 == pytest.approx(metrics.mse, abs=1e-12)

    def test_labels(self):
        data = evaluate(self.hand_built()).to_dict()
        assert data["Directional Accuracy"] == 0.6
        assert data["steps"] == 5

    def test_empty_result(self):
        with pytest.raises(InsufficientDataError):
            evaluate(RollingForecastResult((), window=104))

    def test_hit_rate_never_drops_as_bands_widen(self):
        rng = np.random.default_rng(57)
        base = self.hand_built()
        last = evaluate(base).hit_rate
        for scale in (1.5, 2.0, 4.0, 16.0):
            steps = tuple(
                ForecastStep(s.week, s.forecast_mean, s.forecast_variance * scale, s.actual)
                for s in base.steps
            )
            rate = evaluate(RollingForecastResult(steps, window=104)).hit_rate
            assert rate >= last
            last = rate
        assert last == 1.0

        series = weekly_returns(0.03 * rng.standard_normal(80))
        result = rolling_forecast(series, window=60)
        widened = RollingForecastResult(
            tuple(
                ForecastStep(s.week, s.forecast_mean, 2.0 * s.forecast_variance, s.actual)
                for s in result.steps
            ),
            window=60,
        )
        assert evaluate(widened).hit_rate >= evaluate(result).hit_rate
