"""
Least absolute deviations (median) regression of y on a single regressor

Small samples are solved exactly by descending between lines through data
points: the best line through a fixed point has the weighted median slope,
and some LAD optimum always passes through two data points. Large samples
start from iteratively reweighted least squares and finish with the same
exact descent.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.errors import (
    ConvergenceError,
    InsufficientDataError,
    InvalidParameterError,
    ZeroVarianceError,
)

EXACT_MAX_N = 500
IRLS_DELTA = 1e-8
IRLS_MAX_ITER = 200
IRLS_TOL = 1e-10
LAD_METHODS = ("auto", "exact", "irls")


@dataclass(frozen=True)
class LadFit:
    intercept: float
    slope: float
    objective: float
    method: str
    iterations: int


def lad_objective(intercept: float, slope: float, x: np.ndarray, y: np.ndarray) -> float:
    """Σ|y - intercept - slope·x|"""
    return float(np.sum(np.abs(y - intercept - slope * x)))


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Lower weighted median: the first sorted value whose cumulative weight reaches half"""
    order = np.argsort(values, kind="mergesort")
    cumulative = np.cumsum(weights[order])
    k = int(np.searchsorted(cumulative, 0.5 * cumulative[-1], side="left"))
    return float(values[order[min(k, len(order) - 1)]])


def _best_line_through(i: int, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    dx = x - x[i]
    mask = dx != 0
    slopes = (y[mask] - y[i]) / dx[mask]
    slope = weighted_median(slopes, np.abs(dx[mask]))
    return y[i] - slope * x[i], slope


def _descend(
    start: int, x: np.ndarray, y: np.ndarray, max_iter: int
) -> Tuple[float, float, float, int]:
    """
    Move between point-pair lines until no line through a zero-residual
    point improves the objective
    """
    intercept, slope = _best_line_through(start, x, y)
    objective = lad_objective(intercept, slope, x, y)
    zero_tol = 1e-10 * max(1.0, float(np.max(np.abs(y))))
    checked = {start}

    for iteration in range(1, max_iter + 1):
        residuals = np.abs(y - intercept - slope * x)
        on_line = [int(j) for j in np.flatnonzero(residuals <= zero_tol) if j not in checked]
        improved = False
        for j in on_line:
            cand_intercept, cand_slope = _best_line_through(j, x, y)
            cand_objective = lad_objective(cand_intercept, cand_slope, x, y)
            checked.add(j)
            if cand_objective < objective - 1e-13 * max(1.0, objective):
                intercept, slope, objective = cand_intercept, cand_slope, cand_objective
                checked = {j}
                improved = True
                break
        if not improved:
            return intercept, slope, objective, iteration

    raise ConvergenceError(
        f"LAD descent did not settle within {max_iter} moves",
        {"iterations": max_iter, "objective": objective},
    )


def _irls(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, int]:
    design = np.column_stack([np.ones(len(x)), x])
    beta = np.linalg.lstsq(design, y, rcond=None)[0]
    for iteration in range(1, IRLS_MAX_ITER + 1):
        residuals = y - design @ beta
        root_w = (residuals**2 + IRLS_DELTA) ** -0.25
        updated = np.linalg.lstsq(design * root_w[:, None], y * root_w, rcond=None)[0]
        if np.max(np.abs(updated - beta)) < IRLS_TOL * (1.0 + np.max(np.abs(beta))):
            return updated, iteration
        beta = updated
    return beta, IRLS_MAX_ITER


def lad_fit(x: np.ndarray, y: np.ndarray, method: str = "auto") -> LadFit:
    """
    Minimize Σ|y - b0 - b1·x|

    Args:
        x, y: observations, equal length, x not constant
        method: "exact" (descent from the point nearest the median abscissa),
            "irls" (reweighted least squares, then exact polish from the
            smallest residual), or "auto" (exact up to 500 points)
    """
    if method not in LAD_METHODS:
        raise InvalidParameterError(f"Unknown LAD method {method!r} (expected auto, exact or irls)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameterError("LAD inputs must be 1-D arrays of equal length")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"LAD needs at least 2 points, got {n}")
    if np.ptp(x) == 0:
        raise ZeroVarianceError("LAD slope is undefined when all abscissae are equal")

    max_moves = 10 * n + 100
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        start = int(np.argmin(np.abs(x - np.median(x))))
        intercept, slope, objective, moves = _descend(start, x, y, max_moves)
        return LadFit(intercept, slope, objective, "exact", moves)

    beta, irls_iterations = _irls(x, y)
    start = int(np.argmin(np.abs(y - beta[0] - beta[1] * x)))
    intercept, slope, objective, moves = _descend(start, x, y, max_moves)
    return LadFit(intercept, slope, objective, "irls", irls_iterations + moves)


@dataclass(frozen=True)
class BootstrapResult:
    standard_errors: Tuple[float, float]
    valid_reps: int


def bootstrap_lad(
    x: np.ndarray, y: np.ndarray, reps: int, seed: int, method: str = "auto"
) -> BootstrapResult:
    """
    Nonparametric pairs bootstrap of the LAD coefficients

    All resample indices are drawn up front from ``default_rng(seed)``;
    resamples whose abscissae are all equal are skipped.
    """
    if reps < 2:
        raise InvalidParameterError(f"Bootstrap needs at least 2 replicates, got {reps}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    indices = np.random.default_rng(seed).integers(0, len(x), size=(reps, len(x)))
    draws = []
    for sample in indices:
        xs = x[sample]
        if np.ptp(xs) == 0:
            continue
        fit = lad_fit(xs, y[sample], method)
        draws.append((fit.intercept, fit.slope))
    if len(draws) < 2:
        raise InsufficientDataError(
            f"Only {len(draws)} usable bootstrap resamples out of {reps}"
        )
    spread = np.std(np.array(draws), axis=0, ddof=1)
    return BootstrapResult((float(spread[0]), float(spread[1])), len(draws))
