"""
Tests for ACF, PACF and the correlogram table
"""

import numpy as np
import pytest

from analysis.correlation import acf, correlogram, pacf
from utils.errors import InsufficientDataError, InvalidParameterError, ZeroVarianceError


class TestAcf:
    def test_alternating_series(self):
        values = acf(np.array([1.0, -1.0] * 4), 2)
        np.testing.assert_allclose(values, [1.0, -0.875, 0.75])

    def test_values_bounded(self):
        rng = np.random.default_rng(3)
        values = acf(rng.standard_normal(50), 20)
        assert values[0] == 1.0
        assert np.all(np.abs(values) <= 1.0)

    def test_constant_series(self):
        with pytest.raises(ZeroVarianceError):
            acf(np.full(10, 2.5), 3)

    def test_too_many_lags(self):
        with pytest.raises(InsufficientDataError):
            acf(np.arange(5.0), 5)

    def test_lag_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            acf(np.arange(5.0), 0)


class TestPacf:
    def test_first_lag_equals_acf(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal(200)
        assert pacf(x, 5)[1] == pytest.approx(acf(x, 5)[1])

    def test_ar1_cuts_off_after_lag_one(self):
        rng = np.random.default_rng(12)
        noise = rng.standard_normal(5000)
        x = np.empty_like(noise)
        x[0] = noise[0]
        for t in range(1, len(x)):
            x[t] = 0.6 * x[t - 1] + noise[t]
        values = pacf(x, 5)
        assert values[1] == pytest.approx(0.6, abs=0.05)
        assert np.all(np.abs(values[2:]) < 0.05)

    def test_white_noise_mostly_inside_band(self):
        rng = np.random.default_rng(13)
        inside = []
        for _ in range(100):
            x = rng.standard_normal(200)
            values = pacf(x, 40)[1:]
            inside.extend(np.abs(values) <= 1.96 / np.sqrt(len(x)))
        assert np.mean(inside) >= 0.95


class TestCorrelogram:
    def test_both_series_and_band(self):
        rng = np.random.default_rng(14)
        table = correlogram(rng.standard_normal(200), max_lag=10)
        assert list(table.columns) == ["series", "lag", "acf", "pacf", "band"]
        assert list(table["series"].unique()) == ["returns", "squared_returns"]
        assert len(table) == 20
        assert table["band"].iloc[0] == pytest.approx(1.96 / np.sqrt(200))

    def test_short_series_caps_lags(self):
        rng = np.random.default_rng(15)
        table = correlogram(rng.standard_normal(10))
        assert table["lag"].max() == 9
        assert len(table) == 18
