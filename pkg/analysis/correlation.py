"""
Sample autocorrelation and partial autocorrelation functions
"""

import numpy as np
import pandas as pd

from utils.errors import (
    ConvergenceError,
    InsufficientDataError,
    InvalidParameterError,
    ZeroVarianceError,
)

DEFAULT_CORRELOGRAM_LAGS = 52


def _validate(series: np.ndarray, max_lag: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("Series must be one-dimensional")
    if max_lag < 1:
        raise InvalidParameterError(f"max_lag must be at least 1, got {max_lag}")
    if len(x) <= max_lag:
        raise InsufficientDataError(
            f"Series of length {len(x)} is too short for {max_lag} lags"
        )
    return x


def acf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """
    Biased sample autocorrelations ρ̂(0..max_lag)

    ρ̂(k) = Σ(x_t - x̄)(x_{t+k} - x̄) / Σ(x_t - x̄)², so ρ̂(0) = 1.
    """
    x = _validate(series, max_lag)
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= np.finfo(float).tiny or np.ptp(x) == 0:
        raise ZeroVarianceError("Autocorrelation is undefined for a constant series")
    n = len(d)
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    for k in range(1, max_lag + 1):
        values[k] = float(d[: n - k] @ d[k:]) / denom
    return np.clip(values, -1.0, 1.0)


def pacf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """
    Partial autocorrelations via the Durbin-Levinson recursion on ``acf``

    Element 0 is 1 so that index k holds the lag-k value, as in ``acf``.
    """
    rho = acf(series, max_lag)
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    phi = np.array([rho[1]])
    values[1] = rho[1]
    for k in range(2, max_lag + 1):
        numerator = rho[k] - phi @ rho[k - 1 : 0 : -1]
        denominator = 1.0 - phi @ rho[1:k]
        if denominator <= 0:
            raise ConvergenceError(
                f"Durbin-Levinson recursion broke down at lag {k}",
                {"lag": k, "denominator": float(denominator)},
            )
        phi_kk = numerator / denominator
        if abs(phi_kk) > 1.0 + 1e-9:
            raise ConvergenceError(
                f"Partial autocorrelation {phi_kk:.6f} outside [-1, 1] at lag {k}",
                {"lag": k, "value": float(phi_kk)},
            )
        phi = np.append(phi - phi_kk * phi[::-1], phi_kk)
        values[k] = phi_kk
    return np.clip(values, -1.0, 1.0)


def correlogram(series: np.ndarray, max_lag: int = DEFAULT_CORRELOGRAM_LAGS) -> pd.DataFrame:
    """
    ACF/PACF table for the series and its squares, with the ±1.96/√n band

    ``max_lag`` is reduced to n - 1 for short series.
    """
    x = np.asarray(series, dtype=float)
    lags = min(max_lag, len(x) - 1)
    band = 1.96 / np.sqrt(len(x))
    frames = []
    for name, values in (("returns", x), ("squared_returns", x**2)):
        frames.append(
            pd.DataFrame(
                {
                    "series": name,
                    "lag": np.arange(1, lags + 1),
                    "acf": acf(values, lags)[1:],
                    "pacf": pacf(values, lags)[1:],
                    "band": band,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)
