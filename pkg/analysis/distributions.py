"""
Survival functions for the Student-t, chi-square and normal distributions
Built on the regularized incomplete beta/gamma functions and erfc
"""

from typing import Union

import numpy as np
from scipy import special

from utils.errors import InvalidParameterError

Real = Union[float, np.ndarray]


def _check_df(df: float, name: str = "df") -> None:
    if not (np.isfinite(df) and df > 0):
        raise InvalidParameterError(f"{name} must be a positive number, got {df}")


def _scalar_or_array(values: np.ndarray, like: Real) -> Real:
    if np.ndim(like) == 0:
        return float(values)
    return values


def dist_norm_sf(x: Real) -> Real:
    """P(Z > x) for a standard normal Z"""
    values = 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return _scalar_or_array(values, x)


def dist_t_sf(x: Real, df: float) -> Real:
    """
    P(T > x) for Student-t with ``df`` degrees of freedom

    Uses P(|T| > |x|) = I_{df/(df+x²)}(df/2, 1/2) and symmetry.
    """
    _check_df(df)
    t = np.asarray(x, dtype=float)
    two_tailed = special.betainc(df / 2.0, 0.5, df / (df + t * t))
    values = np.where(t >= 0, 0.5 * two_tailed, 1.0 - 0.5 * two_tailed)
    return _scalar_or_array(values, x)


def dist_chi2_sf(x: Real, k: float) -> Real:
    """P(X > x) for chi-square with ``k`` degrees of freedom"""
    _check_df(k, "k")
    chi = np.asarray(x, dtype=float)
    values = np.where(chi <= 0, 1.0, special.gammaincc(k / 2.0, np.maximum(chi, 0) / 2.0))
    return _scalar_or_array(values, x)


def t_two_sided_p(t: Real, df: float) -> Real:
    """Two-sided p-value for a t statistic"""
    values = np.clip(2.0 * np.asarray(dist_t_sf(np.abs(t), df)), 0.0, 1.0)
    return _scalar_or_array(values, t)


def norm_two_sided_p(z: Real) -> Real:
    """Two-sided p-value for a standard normal statistic"""
    values = np.clip(2.0 * np.asarray(dist_norm_sf(np.abs(z))), 0.0, 1.0)
    return _scalar_or_array(values, z)
