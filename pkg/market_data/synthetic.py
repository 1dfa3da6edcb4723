"""
Synthetic market generator
Builds a seeded transactions + prices pair in the documented CSV schemas,
used as the bundled fixture and for exercising every pipeline stage offline
"""

import os
from dataclasses import dataclass
from datetime import date
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from market_data.readers import PRICE_COLUMNS, TRANSACTION_COLUMNS
from utils import console

DEFAULT_REGISTRIES = ("DE", "FR", "GB", "PL")
DEFAULT_START = date(2009, 12, 1)
DEFAULT_END = date(2012, 6, 30)

# daily log-price GARCH(1,1)
_OMEGA = 8e-6
_ALPHA = 0.08
_BETA = 0.90
_START_PRICE = 14.0

_CLASS_PAIRS = (("OHA", "OHA"), ("OHA", "PHA"), ("PHA", "OHA"), ("PHA", "PHA"))
_CLASS_PAIR_PROBS = (0.3, 0.25, 0.25, 0.2)
_ACCOUNTS_PER_CLASS = 12


@dataclass(frozen=True)
class SyntheticMarket:
    transactions: pd.DataFrame
    prices: pd.DataFrame
    elasticities: Dict[Tuple[str, str], float]


def _simulate_prices(
    rng: np.random.Generator, days: pd.DatetimeIndex
) -> np.ndarray:
    n = len(days)
    shocks = rng.standard_normal(n)
    log_price = np.empty(n)
    variance = _OMEGA / (1 - _ALPHA - _BETA)
    level = np.log(_START_PRICE)
    for t in range(n):
        eps = np.sqrt(variance) * shocks[t]
        level += eps
        log_price[t] = level
        variance = _OMEGA + _ALPHA * eps**2 + _BETA * variance
    return np.exp(log_price)


def _account(rng: np.random.Generator, registry: str, account_class: str) -> str:
    number = int(rng.integers(1, _ACCOUNTS_PER_CLASS + 1))
    return f"{registry}-{account_class}-{number:03d}"


def _split_quantity(rng: np.random.Generator, total: int) -> np.ndarray:
    """Split a daily total into 1-3 positive transfer quantities"""
    pieces = min(int(rng.integers(1, 4)), total)
    if pieces == 1:
        return np.array([total])
    cuts = np.sort(rng.choice(total - 1, size=pieces - 1, replace=False) + 1)
    return np.diff(np.concatenate(([0], cuts, [total])))


def generate_synthetic_market(
    seed: int = 42,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
    registries: Sequence[str] = DEFAULT_REGISTRIES,
) -> SyntheticMarket:
    """
    Generate a realistic, fully deterministic market for the given seed

    Secondary prices are quoted on weekdays (a few dropped as holidays),
    primary auction prices on Tuesdays. Each ordered registry pair trades
    on a random subset of price days with a daily total quantity following
    a log-log relation to the spot price, split into one to three
    transfers between compliance accounts. Administrative allocations are
    mixed in, and the default start date leaves some rows before the
    study window.

    Returns:
        SyntheticMarket with both CSV frames and the true per-pair elasticities
    """
    if end <= start:
        raise ValueError(f"❌ Error: end {end} must be after start {start}")
    rng = np.random.default_rng(seed)

    weekdays = pd.bdate_range(start, end)
    keep = rng.random(len(weekdays)) >= 0.03
    days = weekdays[keep]
    spot = _simulate_prices(rng, days)

    price_rows: List[Dict[str, object]] = []
    for day, price in zip(days, spot):
        iso_day = day.date().isoformat()
        price_rows.append(
            {"date": iso_day, "market": "SECONDARY", "price": round(float(price), 4)}
        )
        if day.weekday() == 1:
            auction = price * (1 + 0.01 * rng.standard_normal())
            price_rows.append(
                {"date": iso_day, "market": "PRIMARY", "price": round(float(auction), 4)}
            )

    pairs = [(a, b) for a in registries for b in registries]
    elasticities = {pair: float(rng.uniform(-2.0, 2.0)) for pair in pairs}
    base_volume = {
        pair: float(rng.uniform(8.0, 10.0)) if pair[0] == pair[1] else float(rng.uniform(6.0, 8.0))
        for pair in pairs
    }
    log_p0 = np.log(_START_PRICE)

    transfer_rows: List[Dict[str, object]] = []
    for day, price in zip(days, spot):
        iso_day = day.date().isoformat()
        for pair in pairs:
            rate = 0.6 if pair[0] == pair[1] else 0.25
            if rng.random() >= rate:
                continue
            log_q = (
                base_volume[pair]
                + elasticities[pair] * (np.log(price) - log_p0)
                + 0.5 * rng.standard_normal()
            )
            total = max(int(round(np.exp(log_q))), 1)
            for amount in _split_quantity(rng, total):
                from_class, to_class = _CLASS_PAIRS[
                    int(rng.choice(len(_CLASS_PAIRS), p=_CLASS_PAIR_PROBS))
                ]
                transfer_rows.append(
                    {
                        "date": iso_day,
                        "from_registry": pair[0],
                        "to_registry": pair[1],
                        "from_class": from_class,
                        "to_class": to_class,
                        "quantity": int(amount),
                        "from_account": _account(rng, pair[0], from_class),
                        "to_account": _account(rng, pair[1], to_class),
                    }
                )
        if rng.random() < 0.1:
            registry = registries[int(rng.integers(len(registries)))]
            transfer_rows.append(
                {
                    "date": iso_day,
                    "from_registry": registry,
                    "to_registry": registry,
                    "from_class": "ADMIN",
                    "to_class": "OHA",
                    "quantity": int(rng.integers(10_000, 200_000)),
                    "from_account": f"{registry}-ADMIN-001",
                    "to_account": _account(rng, registry, "OHA"),
                }
            )

    transactions = pd.DataFrame(transfer_rows)
    transactions.insert(0, "id", [f"T{i:07d}" for i in range(1, len(transactions) + 1)])
    transactions = transactions[TRANSACTION_COLUMNS + ["from_account", "to_account"]]
    prices = pd.DataFrame(price_rows, columns=PRICE_COLUMNS)

    console.log_operation(
        "synthesize",
        "Generated market",
        f"{len(transactions)} transfers, {len(prices)} prices, seed {seed}",
    )
    return SyntheticMarket(transactions, prices, elasticities)


def write_synthetic_market(
    directory: str,
    seed: int = 42,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
    registries: Sequence[str] = DEFAULT_REGISTRIES,
) -> Tuple[str, str]:
    """
    Write transactions.csv and prices.csv into ``directory``

    Returns:
        (transactions path, prices path)
    """
    market = generate_synthetic_market(seed, start, end, registries)
    os.makedirs(directory, exist_ok=True)
    transactions_path = os.path.join(directory, "transactions.csv")
    prices_path = os.path.join(directory, "prices.csv")
    market.transactions.to_csv(transactions_path, index=False, lineterminator="\n")
    market.prices.to_csv(prices_path, index=False, lineterminator="\n")
    console.saved(transactions_path)
    console.saved(prices_path)
    return transactions_path, prices_path
