"""
Ingest pipeline: load, filter to compliance flows, value transfers in EUR,
aggregate prices to weekly means, compute log returns, summarize flows
"""

from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from market_data.calendar import (
    STUDY_END,
    STUDY_START,
    IsoWeek,
    PeriodSegmentation,
    iso_week_of,
    period_of,
)
from market_data.readers import read_prices, read_transactions
from market_data.types import (
    AccountClass,
    Dataset,
    Market,
    PriceObservation,
    ReturnPoint,
    ReturnSeries,
    WeeklyPoint,
    WeeklyPriceSeries,
)
from utils import console
from utils.errors import InsufficientDataError

DEFAULT_MAX_GAP_DAYS = 7
COMPLIANCE_CLASSES = {AccountClass.OHA, AccountClass.PHA}


def load_dataset(
    transactions_path: str,
    prices_path: str,
    strict: bool = False,
    column_map: Optional[Dict[str, str]] = None,
) -> Dataset:
    """Parse both input files into a Dataset with provenance"""
    transfers, transfers_source = read_transactions(transactions_path, strict, column_map)
    prices, prices_source = read_prices(prices_path, strict, column_map)
    return Dataset(
        transfers=tuple(transfers),
        prices=tuple(prices),
        provenance=(transfers_source, prices_source),
    )


def filter_compliance_flows(
    ds: Dataset,
    start: date = STUDY_START,
    end: date = STUDY_END,
    cross_class_only: bool = False,
) -> Dataset:
    """
    Keep transfers between compliance accounts inside the study window

    By default every non-administrative pair is kept (OHA→OHA, OHA→PHA,
    PHA→OHA, PHA→PHA); ``cross_class_only`` narrows this to OHA↔PHA.
    """
    kept = []
    for transfer in ds.transfers:
        if not start <= transfer.date <= end:
            continue
        if transfer.from_class not in COMPLIANCE_CLASSES:
            continue
        if transfer.to_class not in COMPLIANCE_CLASSES:
            continue
        if cross_class_only and transfer.from_class is transfer.to_class:
            continue
        kept.append(transfer)

    console.log_operation(
        "ingest",
        "Filtered compliance flows",
        f"{len(kept)}/{len(ds.transfers)} transfers kept",
    )
    return replace(ds, transfers=tuple(kept))


def daily_secondary_prices(prices: Iterable[PriceObservation]) -> pd.DataFrame:
    """One row per day with secondary observations: date, price (daily mean)"""
    rows = [(p.date, p.price) for p in prices if p.market is Market.SECONDARY]
    if not rows:
        return pd.DataFrame(
            {"date": pd.Series([], dtype="datetime64[ns]"), "price": pd.Series([], dtype=float)}
        )
    frame = pd.DataFrame(sorted(rows), columns=["date", "price"])
    frame["date"] = pd.to_datetime(frame["date"])
    return frame.groupby("date", as_index=False, sort=True)["price"].mean()


def match_spot_prices(
    days: Sequence[date],
    prices: Iterable[PriceObservation],
    max_gap_days: int = DEFAULT_MAX_GAP_DAYS,
) -> np.ndarray:
    """
    Secondary spot price for each day, forward-filled from the latest prior
    observation no more than ``max_gap_days`` earlier; NaN where none exists
    """
    if len(days) == 0:
        return np.empty(0)
    spot = daily_secondary_prices(prices)
    if spot.empty:
        return np.full(len(days), np.nan)

    left = pd.DataFrame({"date": pd.to_datetime(list(days)), "order": np.arange(len(days))})
    left = left.sort_values("date", kind="mergesort")
    merged = pd.merge_asof(
        left,
        spot,
        on="date",
        direction="backward",
        tolerance=pd.Timedelta(days=max_gap_days),
    )
    return merged.sort_values("order")["price"].to_numpy(dtype=float)


def enrich_values(ds: Dataset, max_gap_days: int = DEFAULT_MAX_GAP_DAYS) -> Dataset:
    """
    Value each transfer at quantity × secondary spot price on its date

    Transfers with no price within the gap limit stay unvalued and are
    counted in ``Dataset.unvalued_count``.
    """
    matched = match_spot_prices([t.date for t in ds.transfers], ds.prices, max_gap_days)

    enriched = []
    unvalued = 0
    for transfer, price in zip(ds.transfers, matched):
        if np.isnan(price):
            unvalued += 1
            enriched.append(transfer.with_value(None))
        else:
            enriched.append(transfer.with_value(transfer.quantity * float(price)))

    if unvalued:
        console.warn(
            f"{unvalued} transfer(s) have no secondary price within {max_gap_days} "
            "days and are excluded from value-based analyses"
        )
    console.log_operation("ingest", "Valued transfers", f"{len(enriched) - unvalued} valued")
    return replace(ds, transfers=tuple(enriched), unvalued_count=unvalued)


def aggregate_weekly(prices: Iterable[PriceObservation]) -> WeeklyPriceSeries:
    """Arithmetic mean of secondary prices per ISO week; empty weeks omitted"""
    secondary = sorted(
        (p for p in prices if p.market is Market.SECONDARY),
        key=lambda p: (p.date, p.price),
    )
    if not secondary:
        raise InsufficientDataError("No secondary-market prices to aggregate")

    weeks = [iso_week_of(p.date) for p in secondary]
    frame = pd.DataFrame(
        {
            "iso_year": [w.year for w in weeks],
            "iso_week": [w.week for w in weeks],
            "price": [p.price for p in secondary],
        }
    )
    grouped = frame.groupby(["iso_year", "iso_week"], sort=True)["price"].agg(["mean", "count"])
    if len(grouped) < 2:
        raise InsufficientDataError(
            f"Need at least 2 weeks of secondary prices, found {len(grouped)}"
        )

    points = tuple(
        WeeklyPoint(IsoWeek(int(year), int(week)), float(row["mean"]), int(row["count"]))
        for (year, week), row in grouped.iterrows()
    )
    return WeeklyPriceSeries(points)


def log_returns(wps: WeeklyPriceSeries) -> ReturnSeries:
    """r_t = ln(p_t / p_{t-1}) over consecutive retained weeks"""
    if len(wps) < 2:
        raise InsufficientDataError(f"Need at least 2 weekly prices, found {len(wps)}")
    prices = wps.prices
    returns = np.log(prices[1:] / prices[:-1])
    return ReturnSeries(
        tuple(ReturnPoint(week, float(r)) for week, r in zip(wps.weeks[1:], returns))
    )


def weekly_frame(wps: WeeklyPriceSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "week": [str(p.week) for p in wps.points],
            "mean_price": [p.mean_price for p in wps.points],
            "n_obs": [p.n_obs for p in wps.points],
        }
    )


def returns_frame(series: ReturnSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {"week": [str(w) for w in series.weeks], "log_return": series.values}
    )


def transfers_frame(ds: Dataset) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "id": t.id,
                "date": t.date.isoformat(),
                "from_registry": str(t.from_registry),
                "to_registry": str(t.to_registry),
                "from_class": t.from_class.value,
                "to_class": t.to_class.value,
                "quantity": t.quantity,
                "value_eur": t.value_eur,
            }
            for t in ds.transfers
        ],
        columns=[
            "id",
            "date",
            "from_registry",
            "to_registry",
            "from_class",
            "to_class",
            "quantity",
            "value_eur",
        ],
    )


@dataclass(frozen=True)
class FlowSummary:
    """Descriptive shares per account-class pair and account counts per registry"""

    pairs: pd.DataFrame
    registries: pd.DataFrame


def summarize_flows(ds: Dataset) -> FlowSummary:
    """
    Count, quantity and EUR-value shares per (from_class, to_class) pair,
    plus per-registry transfer counts and unique compliance accounts

    Value shares are computed over valued transfers only; with no valued
    transfers every value share is 0.
    """
    totals: Dict[Tuple[str, str], List[float]] = {}
    for t in ds.transfers:
        entry = totals.setdefault((t.from_class.value, t.to_class.value), [0, 0, 0.0])
        entry[0] += 1
        entry[1] += t.quantity
        entry[2] += t.value_eur or 0.0

    count_total = sum(v[0] for v in totals.values())
    quantity_total = sum(v[1] for v in totals.values())
    value_total = sum(v[2] for v in totals.values())

    pair_rows = []
    for (from_class, to_class), (count, quantity, value) in sorted(totals.items()):
        pair_rows.append(
            {
                "from_class": from_class,
                "to_class": to_class,
                "count": int(count),
                "count_share": count / count_total,
                "quantity": int(quantity),
                "quantity_share": quantity / quantity_total,
                "value_eur": value,
                "value_share": value / value_total if value_total > 0 else 0.0,
            }
        )

    sent: Dict[str, int] = {}
    received: Dict[str, int] = {}
    accounts: Dict[str, Dict[str, set]] = {}
    for t in ds.transfers:
        sent[t.from_registry] = sent.get(t.from_registry, 0) + 1
        received[t.to_registry] = received.get(t.to_registry, 0) + 1
        for registry, account_class, account in (
            (t.from_registry, t.from_class, t.from_account),
            (t.to_registry, t.to_class, t.to_account),
        ):
            if account and account_class in COMPLIANCE_CLASSES:
                per_class = accounts.setdefault(registry, {"OHA": set(), "PHA": set()})
                per_class[account_class.value].add(account)

    registry_rows = []
    for registry in sorted(set(sent) | set(received)):
        per_class = accounts.get(registry, {"OHA": set(), "PHA": set()})
        registry_rows.append(
            {
                "registry": str(registry),
                "transfers_sent": sent.get(registry, 0),
                "transfers_received": received.get(registry, 0),
                "unique_oha_accounts": len(per_class["OHA"]),
                "unique_pha_accounts": len(per_class["PHA"]),
            }
        )

    return FlowSummary(
        pairs=pd.DataFrame(
            pair_rows,
            columns=[
                "from_class",
                "to_class",
                "count",
                "count_share",
                "quantity",
                "quantity_share",
                "value_eur",
                "value_share",
            ],
        ),
        registries=pd.DataFrame(
            registry_rows,
            columns=[
                "registry",
                "transfers_sent",
                "transfers_received",
                "unique_oha_accounts",
                "unique_pha_accounts",
            ],
        ),
    )


def period_price_levels(wps: WeeklyPriceSeries, seg: PeriodSegmentation) -> pd.DataFrame:
    """Mean, min and max weekly price per period (weeks placed by their Thursday)"""
    by_period: Dict[str, List[float]] = {label: [] for label in seg.labels}
    for point in wps.points:
        thursday = point.week.monday() + timedelta(days=3)
        if seg.contains(thursday):
            by_period[period_of(thursday, seg)].append(point.mean_price)

    rows = []
    for label in seg.labels:
        values = np.array(by_period[label], dtype=float)
        rows.append(
            {
                "period": label,
                "weeks": int(values.size),
                "mean_price": float(values.mean()) if values.size else None,
                "min_price": float(values.min()) if values.size else None,
                "max_price": float(values.max()) if values.size else None,
            }
        )
    return pd.DataFrame(rows, columns=["period", "weeks", "mean_price", "min_price", "max_price"])
