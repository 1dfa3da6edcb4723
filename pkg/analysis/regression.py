"""
Ordinary least squares engine shared by the ADF, ARCH-LM, AR and
elasticity fits
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from scipy import linalg

from analysis.distributions import t_two_sided_p
from utils.errors import InsufficientDataError, NonFiniteError, RankDeficientError

RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class OlsFit:
    """
    Least-squares estimates with classical (homoskedastic) inference

    ``degenerate`` marks an exact fit: the residual variance is zero, so
    nonzero coefficients get p-value 0 and standard errors 0.
    """

    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    r_squared: float
    n: int
    df_resid: int
    rss: float
    llf: float
    aic: float
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": self.coefficients.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "t_stats": [_json_float(t) for t in self.t_stats],
            "p_values": self.p_values.tolist(),
            "r_squared": self.r_squared,
            "n": self.n,
            "df_resid": self.df_resid,
            "llf": _json_float(self.llf),
            "aic": _json_float(self.aic),
            "degenerate": self.degenerate,
        }


def _json_float(value: float):
    value = float(value)
    return value if np.isfinite(value) else None


def ols(design: np.ndarray, response: np.ndarray) -> OlsFit:
    """
    Fit response = design @ beta + error by pivoted QR

    Args:
        design: n × k regressor matrix, intercept column included by the caller
        response: length-n vector

    Returns:
        OlsFit with two-sided Student-t p-values on n - k degrees of freedom
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise InsufficientDataError(
            f"Response length {y.shape} does not match design rows {n}"
        )
    if n <= k:
        raise InsufficientDataError(
            f"OLS needs more observations than regressors (n={n}, k={k})"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteError("OLS inputs contain NaN or infinite values")

    largest_norm = float(np.max(np.linalg.norm(X, axis=0)))
    q, r, perm = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if largest_norm == 0 or np.any(diag <= RANK_TOLERANCE * largest_norm):
        rank = int(np.sum(diag > RANK_TOLERANCE * largest_norm)) if largest_norm else 0
        raise RankDeficientError(
            f"Design matrix is rank deficient (rank {rank} < {k} columns)"
        )

    beta = np.empty(k)
    beta[perm] = linalg.solve_triangular(r, q.T @ y)
    r_inv = linalg.solve_triangular(r, np.eye(k))
    cov_unscaled = np.empty((k, k))
    cov_unscaled[np.ix_(perm, perm)] = r_inv @ r_inv.T

    residuals = y - X @ beta
    rss = float(residuals @ residuals)
    df_resid = n - k
    tss = float(np.sum((y - y.mean()) ** 2))

    exact_limit = (np.finfo(float).eps * n * max(float(np.linalg.norm(y)), 1.0)) ** 2
    degenerate = rss <= exact_limit
    if degenerate:
        scale = max(float(np.linalg.norm(y)), 1.0)
        nonzero = np.abs(beta) > 1e-12 * scale
        standard_errors = np.zeros(k)
        t_stats = np.where(nonzero, np.sign(beta) * np.inf, 0.0)
        p_values = np.where(nonzero, 0.0, 1.0)
        r_squared = 1.0 if tss > 0 else 0.0
        llf = np.inf
    else:
        sigma2 = rss / df_resid
        standard_errors = np.sqrt(sigma2 * np.diag(cov_unscaled))
        t_stats = beta / standard_errors
        p_values = np.asarray(t_two_sided_p(t_stats, df_resid), dtype=float)
        r_squared = float(np.clip(1.0 - rss / tss, 0.0, 1.0)) if tss > 0 else 0.0
        llf = -0.5 * n * (np.log(2 * np.pi) + np.log(rss / n) + 1.0)

    return OlsFit(
        coefficients=beta,
        standard_errors=standard_errors,
        t_stats=t_stats,
        p_values=p_values,
        residuals=residuals,
        r_squared=r_squared,
        n=n,
        df_resid=df_resid,
        rss=rss,
        llf=float(llf),
        aic=float(-2.0 * llf + 2 * k),
        degenerate=bool(degenerate),
    )


def add_constant(x: np.ndarray) -> np.ndarray:
    """Prepend an intercept column"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.column_stack([np.ones(len(x)), x])
