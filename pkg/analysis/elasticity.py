"""
Price elasticity of traded quantity

Fits log Q = β0 + β1·log P per (source registry, destination registry,
period) by OLS and LAD, where Q is the daily traded quantity of the pair
and P the secondary spot price on that day.
"""

import math
from dataclasses import dataclass
from datetime import date
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.distributions import norm_two_sided_p
from analysis.lad import bootstrap_lad, lad_fit
from analysis.regression import add_constant, ols
from market_data.calendar import PeriodSegmentation, period_of
from market_data.ingest import DEFAULT_MAX_GAP_DAYS, match_spot_prices
from market_data.types import Dataset
from utils import console
from utils.dot_writer import DotGraph
from utils.errors import (
    DataError,
    InsufficientDataError,
    InvalidParameterError,
    NumericalError,
    ZeroVarianceError,
)

DEFAULT_REGISTRIES = ("FR", "DE", "GB")
DEFAULT_MIN_N = 30
DEFAULT_BOOTSTRAP_REPS = 999
DEFAULT_SEED = 42
DEFAULT_SIGNIFICANCE = 0.05
METHODS = ("OLS", "LAD")
QUANTITY_AGGREGATIONS = ("sum", "mean")

Pair = Tuple[str, str]
CellKey = Tuple[str, str, str]


@dataclass(frozen=True)
class FlowObservation:
    """One day of traded quantity for a registry pair, in logs"""

    date: date
    from_registry: str
    to_registry: str
    log_q: float
    log_p: float
    period: str


def stars_for(p_value: Optional[float]) -> str:
    if p_value is None or not math.isfinite(p_value):
        return ""
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class ElasticityEstimate:
    from_registry: str
    to_registry: str
    period: str
    method: str
    beta0: float
    beta1: float
    se0: float
    se1: float
    p0: float
    p1: float
    n: int
    significance: float = DEFAULT_SIGNIFICANCE

    @property
    def significant(self) -> bool:
        return self.p1 < self.significance

    @property
    def stars(self) -> str:
        return stars_for(self.p1)

    @property
    def regime(self) -> str:
        return "elastic" if abs(self.beta1) > 1 else "inelastic"

    @property
    def key(self) -> CellKey:
        return (self.from_registry, self.to_registry, self.period)


def build_flows(
    ds: Dataset,
    pair: Pair,
    period: str,
    seg: PeriodSegmentation,
    max_gap_days: int = DEFAULT_MAX_GAP_DAYS,
    quantity_aggregation: str = "sum",
) -> List[FlowObservation]:
    """
    Daily log quantity and log spot price for one pair within one period

    Days without a transfer are omitted, as are days with no secondary
    price within ``max_gap_days``.
    """
    if quantity_aggregation not in QUANTITY_AGGREGATIONS:
        raise InvalidParameterError(
            f"Unknown quantity aggregation {quantity_aggregation!r} (expected sum or mean)"
        )
    source, target = pair
    daily: Dict[date, List[int]] = {}
    for t in ds.transfers:
        if t.from_registry != source or t.to_registry != target:
            continue
        if not seg.contains(t.date) or period_of(t.date, seg) != period:
            continue
        daily.setdefault(t.date, []).append(t.quantity)

    days = sorted(daily)
    prices = match_spot_prices(days, ds.prices, max_gap_days)
    observations = []
    for day, price in zip(days, prices):
        if np.isnan(price):
            continue
        quantities = daily[day]
        quantity = sum(quantities) if quantity_aggregation == "sum" else np.mean(quantities)
        observations.append(
            FlowObservation(
                day, source, target, math.log(quantity), math.log(float(price)), period
            )
        )
    return observations


def _arrays(obs: Sequence[FlowObservation], min_n: int) -> Tuple[np.ndarray, np.ndarray]:
    if len(obs) < max(min_n, 3):
        raise InsufficientDataError(
            f"Need at least {max(min_n, 3)} daily observations, got {len(obs)}"
        )
    log_p = np.array([o.log_p for o in obs])
    log_q = np.array([o.log_q for o in obs])
    if np.ptp(log_p) == 0:
        raise ZeroVarianceError("Spot price does not vary across the observations")
    return log_p, log_q


def fit_ols_loglog(
    obs: Sequence[FlowObservation],
    min_n: int = DEFAULT_MIN_N,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> ElasticityEstimate:
    log_p, log_q = _arrays(obs, min_n)
    fit = ols(add_constant(log_p), log_q)
    first = obs[0]
    return ElasticityEstimate(
        from_registry=first.from_registry,
        to_registry=first.to_registry,
        period=first.period,
        method="OLS",
        beta0=float(fit.coefficients[0]),
        beta1=float(fit.coefficients[1]),
        se0=float(fit.standard_errors[0]),
        se1=float(fit.standard_errors[1]),
        p0=float(fit.p_values[0]),
        p1=float(fit.p_values[1]),
        n=fit.n,
        significance=significance,
    )


def _bootstrap_p(estimate: float, se: float) -> float:
    if se > 0:
        return float(norm_two_sided_p(estimate / se))
    return 0.0 if estimate != 0 else 1.0


def fit_lad_loglog(
    obs: Sequence[FlowObservation],
    bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
    seed: int = DEFAULT_SEED,
    min_n: int = DEFAULT_MIN_N,
    significance: float = DEFAULT_SIGNIFICANCE,
    method: str = "auto",
) -> ElasticityEstimate:
    """
    Median regression of log quantity on log price

    Standard errors come from a pairs bootstrap seeded with ``seed``;
    p-values use the normal approximation to estimate / SE.
    """
    log_p, log_q = _arrays(obs, min_n)
    fit = lad_fit(log_p, log_q, method)
    boot = bootstrap_lad(log_p, log_q, bootstrap_reps, seed, method)
    se0, se1 = boot.standard_errors
    first = obs[0]
    return ElasticityEstimate(
        from_registry=first.from_registry,
        to_registry=first.to_registry,
        period=first.period,
        method="LAD",
        beta0=fit.intercept,
        beta1=fit.slope,
        se0=se0,
        se1=se1,
        p0=_bootstrap_p(fit.intercept, se0),
        p1=_bootstrap_p(fit.slope, se1),
        n=len(obs),
        significance=significance,
    )


def elasticity_graph(
    estimates: Iterable[ElasticityEstimate],
    period: str,
    method: str = "OLS",
    registries: Optional[Sequence[str]] = None,
) -> str:
    """
    DOT digraph of one period's elasticities

    Node labels carry the self-pair elasticity; a directed edge is drawn
    for every significant cross-registry estimate, labeled with β1.
    Insignificant cross-registry estimates are left out.
    """
    method = method.upper()
    if method not in METHODS:
        raise InvalidParameterError(f"Unknown method {method!r} (expected OLS or LAD)")
    chosen = [e for e in estimates if e.period == period and e.method == method]
    codes = list(registries) if registries else sorted(
        {e.from_registry for e in chosen} | {e.to_registry for e in chosen}
    )

    graph = DotGraph(f"elasticity_{period}", {"label": f"{period} ({method})"})
    self_estimates = {e.from_registry: e for e in chosen if e.from_registry == e.to_registry}
    for code in codes:
        estimate = self_estimates.get(code)
        if estimate is None:
            console.warn(f"No {method} self-elasticity for {code} in {period}; node left unlabeled")
            graph.add_node(code)
            continue
        graph.add_node(
            code,
            label=f"{code}\n{estimate.beta1:+.2f}{estimate.stars}",
            style="solid" if estimate.significant else "dashed",
        )

    external = sorted(
        (e for e in chosen if e.from_registry != e.to_registry and e.significant),
        key=lambda e: (e.from_registry, e.to_registry),
    )
    for e in external:
        graph.add_edge(e.from_registry, e.to_registry, label=f"{e.beta1:+.2f}")
    return graph.render()


REPORT_COLUMNS = [
    "from",
    "to",
    "period",
    "method",
    "beta0",
    "p0",
    "stars0",
    "beta1",
    "p1",
    "stars1",
    "se1",
    "n",
    "significant",
    "regime",
    "note",
]


@dataclass(frozen=True)
class ElasticityReport:
    table: pd.DataFrame
    estimates: Tuple[ElasticityEstimate, ...]
    observations: Dict[CellKey, List[FlowObservation]]


def _estimate_row(e: ElasticityEstimate) -> Dict[str, object]:
    return {
        "from": e.from_registry,
        "to": e.to_registry,
        "period": e.period,
        "method": e.method,
        "beta0": e.beta0,
        "p0": e.p0,
        "stars0": stars_for(e.p0),
        "beta1": e.beta1,
        "p1": e.p1,
        "stars1": e.stars,
        "se1": e.se1,
        "n": e.n,
        "significant": e.significant,
        "regime": e.regime,
        "note": "",
    }


def _blank_row(key: CellKey, method: str, n: int, reason: str) -> Dict[str, object]:
    source, target, period = key
    row: Dict[str, object] = {column: None for column in REPORT_COLUMNS}
    row.update(
        {"from": source, "to": target, "period": period, "method": method, "n": n, "note": reason}
    )
    return row


def elasticity_report(
    ds: Dataset,
    seg: PeriodSegmentation,
    registries: Sequence[str] = DEFAULT_REGISTRIES,
    methods: Sequence[str] = METHODS,
    bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
    seed: int = DEFAULT_SEED,
    min_n: int = DEFAULT_MIN_N,
    significance: float = DEFAULT_SIGNIFICANCE,
    max_gap_days: int = DEFAULT_MAX_GAP_DAYS,
    quantity_aggregation: str = "sum",
) -> ElasticityReport:
    """
    Every (from, to, period, method) cell over the registry subset

    Cells that cannot be estimated become rows with empty coefficients and
    the reason in ``note``. Every LAD cell bootstraps from the same seed.
    Rows are ordered by source, destination, period and then method.
    """
    methods = [m.upper() for m in methods]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise InvalidParameterError(f"Unknown method(s) {unknown} (expected OLS and/or LAD)")
    methods = [m for m in METHODS if m in methods]

    rows: List[Dict[str, object]] = []
    estimates: List[ElasticityEstimate] = []
    observations: Dict[CellKey, List[FlowObservation]] = {}
    for source in sorted(registries):
        for target in sorted(registries):
            for period in seg.labels:
                key = (source, target, period)
                obs = build_flows(
                    ds, (source, target), period, seg, max_gap_days, quantity_aggregation
                )
                observations[key] = obs
                for method in methods:
                    try:
                        if method == "OLS":
                            estimate = fit_ols_loglog(obs, min_n, significance)
                        else:
                            estimate = fit_lad_loglog(obs, bootstrap_reps, seed, min_n, significance)
                    except (DataError, NumericalError) as e:
                        rows.append(_blank_row(key, method, len(obs), str(e)))
                        continue
                    estimates.append(estimate)
                    rows.append(_estimate_row(estimate))

    console.log_operation(
        "elasticity",
        "Estimated elasticities",
        f"{len(estimates)}/{len(rows)} cells estimated",
    )
    return ElasticityReport(
        pd.DataFrame(rows, columns=REPORT_COLUMNS), tuple(estimates), observations
    )


def scatter_frame(
    observations: Dict[CellKey, List[FlowObservation]],
    estimates: Iterable[ElasticityEstimate],
) -> pd.DataFrame:
    """
    Plot-ready points with the OLS line of their pair-period

    ``significant`` tells whether that line is drawn solid or dotted.
    """
    ols_lines = {e.key: e for e in estimates if e.method == "OLS"}
    rows = []
    for key in sorted(observations):
        line = ols_lines.get(key)
        for o in observations[key]:
            rows.append(
                {
                    "from": o.from_registry,
                    "to": o.to_registry,
                    "period": o.period,
                    "date": o.date.isoformat(),
                    "log_p": o.log_p,
                    "log_q": o.log_q,
                    "ols_fitted": line.beta0 + line.beta1 * o.log_p if line else None,
                    "significant": line.significant if line else False,
                }
            )
    return pd.DataFrame(
        rows,
        columns=["from", "to", "period", "date", "log_p", "log_q", "ols_fitted", "significant"],
    )
