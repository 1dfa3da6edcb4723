"""
Rolling two-stage forecast engine
AR(p) conditional mean by OLS, GARCH(1,1) conditional variance by Gaussian
maximum likelihood, one-step-ahead predictions and backtest metrics
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, signal, special

from analysis.regression import ols
from market_data.calendar import IsoWeek
from market_data.types import ReturnSeries
from utils import console
from utils.errors import (
    DataError,
    GarchFitError,
    InsufficientDataError,
    InvalidParameterError,
    NonFiniteError,
    NumericalError,
    ZeroVarianceError,
)

DEFAULT_AR_ORDER = 3
DEFAULT_WINDOW = 104
MIN_WINDOW = 50
GARCH_MIN_LENGTH = 50
VARIANCE_INITS = ("sample", "unconditional")

# (alpha, beta) starting points; omega is set so the start matches the sample variance
DEFAULT_STARTS: Tuple[Tuple[float, float], ...] = ((0.05, 0.90), (0.10, 0.80), (0.20, 0.50))
SIMPLEX_XATOL = 1e-8
SIMPLEX_MAXITER = 2000
FALLBACK_VARIANCE_FLOOR = 1e-12


# AR mean model


@dataclass(frozen=True, eq=False)
class ArModel:
    """r_t = c + Σ φ_i r_{t-i} + ε_t"""

    order: int
    intercept: float
    coefficients: np.ndarray
    residuals: np.ndarray = field(repr=False, compare=False)
    degenerate: bool = False

    def forecast(self, history: Sequence[float]) -> float:
        """One-step-ahead mean given the series up to now (latest last)"""
        recent = np.asarray(history, dtype=float)[-self.order :][::-1]
        if len(recent) < self.order:
            raise InsufficientDataError(
                f"AR({self.order}) forecast needs {self.order} past values"
            )
        return float(self.intercept + self.coefficients @ recent)


def ar_min_length(order: int) -> int:
    return max(order + 10, 10 * order)


def fit_ar(series: Sequence[float], order: int = DEFAULT_AR_ORDER) -> ArModel:
    """
    Least-squares AR(order) fit with an intercept

    An all-zero series returns the zero model flagged degenerate; any
    other rank-deficient window (e.g. a nonzero constant) raises.
    """
    if order < 1:
        raise InvalidParameterError(f"AR order must be at least 1, got {order}")
    x = np.asarray(series, dtype=float)
    n = len(x)
    needed = ar_min_length(order)
    if n < needed:
        raise InsufficientDataError(
            f"AR({order}) needs at least {needed} observations, got {n}"
        )
    if not np.any(x):
        return ArModel(order, 0.0, np.zeros(order), np.zeros(n - order), degenerate=True)

    design = np.column_stack(
        [np.ones(n - order)] + [x[order - i : n - i] for i in range(1, order + 1)]
    )
    fit = ols(design, x[order:])
    return ArModel(
        order=order,
        intercept=float(fit.coefficients[0]),
        coefficients=fit.coefficients[1:].copy(),
        residuals=fit.residuals,
        degenerate=fit.degenerate,
    )


# GARCH(1,1) variance model


@dataclass(frozen=True)
class GarchModel:
    """σ²_t = ω + α ε²_{t-1} + β σ²_{t-1}, σ²_1 = init_variance"""

    omega: float
    alpha: float
    beta: float
    init_variance: float

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise InvalidParameterError(f"GARCH omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParameterError(
                f"GARCH alpha and beta must be nonnegative (alpha={self.alpha}, beta={self.beta})"
            )
        if not self.alpha + self.beta < 1:
            raise InvalidParameterError(
                f"GARCH alpha + beta must be below 1, got {self.alpha + self.beta}"
            )
        if not (math.isfinite(self.init_variance) and self.init_variance > 0):
            raise InvalidParameterError(
                f"GARCH initial variance must be positive, got {self.init_variance}"
            )

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    def variances(self, residuals: np.ndarray) -> np.ndarray:
        """Conditional variance path σ²_1..σ²_n"""
        e = np.asarray(residuals, dtype=float)
        sigma2 = np.empty(len(e))
        sigma2[0] = self.init_variance
        if len(e) > 1:
            drive = self.omega + self.alpha * e[:-1] ** 2
            sigma2[1:], _ = signal.lfilter(
                [1.0], [1.0, -self.beta], drive, zi=[self.beta * self.init_variance]
            )
        return sigma2

    def forecast_variance(self, residuals: np.ndarray) -> float:
        """σ²_{n+1} from the last residual and the last conditional variance"""
        e = np.asarray(residuals, dtype=float)
        last_variance = self.variances(e)[-1]
        return float(self.omega + self.alpha * e[-1] ** 2 + self.beta * last_variance)

    def to_dict(self) -> Dict[str, float]:
        return {
            "omega": self.omega,
            "alpha": self.alpha,
            "beta": self.beta,
            "init_variance": self.init_variance,
        }


def garch_nll(params: GarchModel, residuals: np.ndarray) -> float:
    """Gaussian negative log-likelihood ½Σ[ln(2πσ²_t) + ε²_t/σ²_t]"""
    e = np.asarray(residuals, dtype=float)
    if len(e) == 0:
        raise InsufficientDataError("GARCH likelihood needs at least one residual")
    with np.errstate(all="ignore"):
        sigma2 = params.variances(e)
        if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
            raise NonFiniteError("GARCH variance recursion produced a nonfinite value")
        value = 0.5 * float(np.sum(np.log(2.0 * np.pi * sigma2) + e**2 / sigma2))
    if not math.isfinite(value):
        raise NonFiniteError("GARCH negative log-likelihood is not finite")
    return value


def garch_to_unconstrained(omega: float, alpha: float, beta: float) -> np.ndarray:
    """(ω, α, β) → (ln ω, logit(α+β), logit(α/(α+β)))"""
    persistence = alpha + beta
    return np.array(
        [math.log(omega), special.logit(persistence), special.logit(alpha / persistence)]
    )


def garch_from_unconstrained(u: Sequence[float]) -> Tuple[float, float, float]:
    """Inverse of ``garch_to_unconstrained``; any real u gives α, β ≥ 0, α+β < 1"""
    omega = math.exp(u[0])
    persistence = float(special.expit(u[1]))
    share = float(special.expit(u[2]))
    return omega, persistence * share, persistence * (1.0 - share)


@dataclass(frozen=True)
class GarchEstimate:
    """Best optimum over all starts plus per-start diagnostics"""

    model: GarchModel
    nll: float
    converged: bool
    attempts: Tuple[Dict[str, Any], ...]


def _init_variance(
    variance_init: str, sample_variance: float, omega: float, alpha: float, beta: float
) -> float:
    if variance_init == "sample":
        return sample_variance
    return omega / (1.0 - alpha - beta)


def estimate_garch(
    residuals: Sequence[float],
    variance_init: str = "sample",
    starts: Sequence[Tuple[float, float]] = DEFAULT_STARTS,
) -> GarchEstimate:
    """
    Multi-start Nelder-Mead maximum likelihood over the unconstrained
    parameterization

    A start fails only when it yields no finite optimum; hitting the
    iteration cap is recorded in the diagnostics, not treated as failure.
    """
    if variance_init not in VARIANCE_INITS:
        raise InvalidParameterError(
            f"Unknown variance_init {variance_init!r} (expected sample or unconditional)"
        )
    e = np.asarray(residuals, dtype=float)
    if len(e) < GARCH_MIN_LENGTH:
        raise InsufficientDataError(
            f"GARCH(1,1) needs at least {GARCH_MIN_LENGTH} residuals, got {len(e)}"
        )
    if not np.all(np.isfinite(e)):
        raise NonFiniteError("GARCH residuals contain NaN or infinite values")
    sample_variance = float(np.var(e))
    if sample_variance <= 0:
        raise ZeroVarianceError("GARCH fit needs residuals with nonzero variance")

    def objective(u: np.ndarray) -> float:
        omega, alpha, beta = garch_from_unconstrained(u)
        if not (omega > 0 and alpha + beta < 1 and math.isfinite(omega)):
            return math.inf
        init = _init_variance(variance_init, sample_variance, omega, alpha, beta)
        try:
            return garch_nll(GarchModel(omega, alpha, beta, init), e)
        except (NumericalError, InvalidParameterError):
            return math.inf

    attempts: List[Dict[str, Any]] = []
    best: Optional[Tuple[float, np.ndarray, bool]] = None
    for alpha0, beta0 in starts:
        omega0 = sample_variance * (1.0 - alpha0 - beta0)
        u0 = garch_to_unconstrained(omega0, alpha0, beta0)
        with np.errstate(all="ignore"):
            result = optimize.minimize(
                objective,
                u0,
                method="Nelder-Mead",
                options={
                    "xatol": SIMPLEX_XATOL,
                    "fatol": math.inf,
                    "maxiter": SIMPLEX_MAXITER,
                },
            )
        finite = bool(np.isfinite(result.fun))
        attempts.append(
            {
                "start": {"alpha": alpha0, "beta": beta0},
                "nll": float(result.fun) if finite else None,
                "iterations": int(result.nit),
                "converged": bool(result.success),
                "message": str(result.message),
            }
        )
        if finite and (best is None or result.fun < best[0]):
            best = (float(result.fun), result.x, bool(result.success))

    if best is None:
        raise GarchFitError(
            "GARCH(1,1) fit failed: no start reached a finite likelihood",
            {"attempts": attempts},
        )

    nll, u_best, converged = best
    omega, alpha, beta = garch_from_unconstrained(u_best)
    model = GarchModel(
        omega, alpha, beta, _init_variance(variance_init, sample_variance, omega, alpha, beta)
    )
    return GarchEstimate(model, nll, converged, tuple(attempts))


def fit_garch(residuals: Sequence[float], variance_init: str = "sample") -> GarchModel:
    return estimate_garch(residuals, variance_init).model


# Rolling backtest


@dataclass(frozen=True)
class ForecastStep:
    week: IsoWeek
    forecast_mean: float
    forecast_variance: float
    actual: float
    flagged: bool = False

    @property
    def band_lo(self) -> float:
        return self.forecast_mean - math.sqrt(self.forecast_variance)

    @property
    def band_hi(self) -> float:
        return self.forecast_mean + math.sqrt(self.forecast_variance)


@dataclass(frozen=True, eq=False)
class RollingForecastResult:
    """One-step-ahead forecasts; steps are ordered by week"""

    steps: Tuple[ForecastStep, ...]
    window: int
    ar_order: int = DEFAULT_AR_ORDER
    variance_init: str = "sample"

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def flagged_count(self) -> int:
        return sum(1 for step in self.steps if step.flagged)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "week": [str(s.week) for s in self.steps],
                "mean": [s.forecast_mean for s in self.steps],
                "variance": [s.forecast_variance for s in self.steps],
                "actual": [s.actual for s in self.steps],
                "band_lo": [s.band_lo for s in self.steps],
                "band_hi": [s.band_hi for s in self.steps],
                "flagged": [s.flagged for s in self.steps],
            },
            columns=["week", "mean", "variance", "actual", "band_lo", "band_hi", "flagged"],
        )


def _forecast_step(
    window_values: np.ndarray, ar_order: int, variance_init: str
) -> Tuple[float, float, bool]:
    try:
        ar = fit_ar(window_values, ar_order)
    except (NumericalError, DataError):
        # constant window: the mean model itself is unidentifiable
        fallback = max(float(np.var(window_values)), FALLBACK_VARIANCE_FLOOR)
        return float(np.mean(window_values)), fallback, True
    mean = ar.forecast(window_values)
    residuals = ar.residuals
    try:
        garch = fit_garch(residuals, variance_init)
        variance = garch.forecast_variance(residuals)
        if not (math.isfinite(variance) and variance > 0):
            raise NonFiniteError(f"GARCH variance forecast {variance} is not positive")
        return mean, variance, False
    except (NumericalError, DataError):
        fallback = max(float(np.var(residuals)), FALLBACK_VARIANCE_FLOOR)
        return mean, fallback, True


def rolling_forecast(
    series: ReturnSeries,
    window: int = DEFAULT_WINDOW,
    ar_order: int = DEFAULT_AR_ORDER,
    variance_init: str = "sample",
) -> RollingForecastResult:
    """
    Refit AR and GARCH on each trailing window and forecast the next return

    Steps where the GARCH fit fails fall back to the window's residual
    variance and are flagged; a window the AR fit rejects (e.g. constant)
    falls back to its own mean and variance, also flagged.
    """
    values = series.values
    if window < MIN_WINDOW:
        raise InvalidParameterError(f"Forecast window must be at least {MIN_WINDOW}, got {window}")
    if window < ar_min_length(ar_order):
        raise InvalidParameterError(
            f"Window {window} is too short for AR({ar_order}) (need {ar_min_length(ar_order)})"
        )
    if variance_init not in VARIANCE_INITS:
        raise InvalidParameterError(
            f"Unknown variance_init {variance_init!r} (expected sample or unconditional)"
        )
    if len(values) <= window:
        raise InsufficientDataError(
            f"Rolling forecast needs more than {window} returns, got {len(values)}"
        )

    total = len(values) - window
    console.progress(f"Rolling AR({ar_order})+GARCH(1,1) forecast: {total} steps, window {window}")
    steps: List[ForecastStep] = []
    for t in range(window, len(values)):
        mean, variance, flagged = _forecast_step(values[t - window : t], ar_order, variance_init)
        steps.append(ForecastStep(series.weeks[t], mean, variance, float(values[t]), flagged))

    result = RollingForecastResult(tuple(steps), window, ar_order, variance_init)
    if result.flagged_count:
        console.warn(
            f"{result.flagged_count}/{total} forecast step(s) used the residual-variance fallback"
        )
    console.log_operation("forecast", "Rolling forecast complete", f"{total} steps")
    return result


@dataclass(frozen=True)
class ForecastMetrics:
    mse: float
    rmse: float
    mae: float
    directional_accuracy: float
    hit_rate: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "Mean Squared Error (MSE)": self.mse,
            "Root Mean Squared Error (RMSE)": self.rmse,
            "Mean Absolute Error (MAE)": self.mae,
            "Directional Accuracy": self.directional_accuracy,
            "Hit Rate (within ±1σ band)": self.hit_rate,
            "steps": self.n,
        }


def evaluate(result: RollingForecastResult) -> ForecastMetrics:
    """
    Error and accuracy metrics over all steps

    Directional accuracy counts sign matches (a zero forecast matches only
    a zero actual); the hit rate counts actuals within one forecast
    standard deviation of the mean.
    """
    if not result.steps:
        raise InsufficientDataError("Cannot evaluate an empty forecast result")
    mean = np.array([s.forecast_mean for s in result.steps])
    variance = np.array([s.forecast_variance for s in result.steps])
    actual = np.array([s.actual for s in result.steps])

    errors = actual - mean
    mse = float(np.mean(errors**2))
    return ForecastMetrics(
        mse=mse,
        rmse=math.sqrt(mse),
        mae=float(np.mean(np.abs(errors))),
        directional_accuracy=float(np.mean(np.sign(mean) == np.sign(actual))),
        hit_rate=float(np.mean(np.abs(errors) <= np.sqrt(variance))),
        n=len(result.steps),
    )
