"""
Domain types shared by every analysis stage
All types are immutable value objects
"""

import math
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np

from market_data.calendar import IsoWeek
from utils.errors import DataError, InsufficientDataError


class RegistryCode(str):
    """Two uppercase ASCII letters identifying a national registry"""

    def __new__(cls, value: str) -> "RegistryCode":
        text = str(value).strip()
        if len(text) != 2 or not (text.isascii() and text.isalpha() and text.isupper()):
            raise DataError(
                f"Invalid registry code {value!r} (expected two uppercase letters, e.g. 'DE')"
            )
        return super().__new__(cls, text)


class AccountClass(Enum):
    """Operator holding, person holding, or administrative account"""

    OHA = "OHA"
    PHA = "PHA"
    ADMIN = "ADMIN"

    @classmethod
    def parse(cls, raw: str) -> "AccountClass":
        try:
            return cls(str(raw).strip().upper())
        except ValueError:
            raise DataError(
                f"Unknown account class {raw!r} (expected OHA, PHA or ADMIN)"
            ) from None


class Market(Enum):
    PRIMARY = "PRIMARY"
    SECONDARY = "SECONDARY"

    @classmethod
    def parse(cls, raw: str) -> "Market":
        try:
            return cls(str(raw).strip().upper())
        except ValueError:
            raise DataError(
                f"Unknown market {raw!r} (expected PRIMARY or SECONDARY)"
            ) from None


@dataclass(frozen=True)
class TransferRecord:
    """One allowance transfer between two accounts"""

    id: str
    date: date
    from_registry: RegistryCode
    to_registry: RegistryCode
    from_class: AccountClass
    to_class: AccountClass
    quantity: int
    value_eur: Optional[float] = None
    from_account: Optional[str] = None
    to_account: Optional[str] = None

    def __post_init__(self):
        if self.quantity <= 0:
            raise DataError(f"Transfer {self.id}: quantity must be positive")
        if self.value_eur is not None and not (
            math.isfinite(self.value_eur) and self.value_eur >= 0
        ):
            raise DataError(f"Transfer {self.id}: value_eur must be nonnegative")

    @property
    def class_pair(self) -> Tuple[AccountClass, AccountClass]:
        return (self.from_class, self.to_class)

    def with_value(self, value_eur: Optional[float]) -> "TransferRecord":
        return replace(self, value_eur=value_eur)


@dataclass(frozen=True)
class PriceObservation:
    """Daily spot price in EUR per allowance"""

    date: date
    market: Market
    price: float

    def __post_init__(self):
        if not (math.isfinite(self.price) and self.price > 0):
            raise DataError(f"Price on {self.date} must be positive, got {self.price}")


class WeeklyPoint(NamedTuple):
    week: IsoWeek
    mean_price: float
    n_obs: int


@dataclass(frozen=True)
class WeeklyPriceSeries:
    """Weekly mean secondary-market prices; empty weeks are omitted"""

    points: Tuple[WeeklyPoint, ...]

    def __post_init__(self):
        for earlier, later in zip(self.points, self.points[1:]):
            if later.week <= earlier.week:
                raise DataError(f"Weeks not strictly increasing at {later.week}")
        for point in self.points:
            if point.mean_price <= 0 or point.n_obs < 1:
                raise DataError(f"Invalid weekly point {point}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def weeks(self) -> Tuple[IsoWeek, ...]:
        return tuple(p.week for p in self.points)

    @property
    def prices(self) -> np.ndarray:
        return np.array([p.mean_price for p in self.points], dtype=float)


class ReturnPoint(NamedTuple):
    week: IsoWeek
    r: float


@dataclass(frozen=True)
class ReturnSeries:
    """Weekly log returns; each point is labeled by the later week"""

    points: Tuple[ReturnPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def weeks(self) -> Tuple[IsoWeek, ...]:
        return tuple(p.week for p in self.points)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.r for p in self.points], dtype=float)

    @classmethod
    def from_values(cls, weeks, values) -> "ReturnSeries":
        weeks = list(weeks)
        values = list(values)
        if len(weeks) != len(values):
            raise InsufficientDataError("weeks and values differ in length")
        return cls(tuple(ReturnPoint(w, float(v)) for w, v in zip(weeks, values)))


@dataclass(frozen=True)
class SourceFile:
    """Provenance of one parsed input file"""

    path: str
    sha256: str
    rows_read: int
    rows_kept: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "sha256": self.sha256,
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
        }


@dataclass(frozen=True)
class Dataset:
    """Transfers and prices, both sorted by date, plus their provenance"""

    transfers: Tuple[TransferRecord, ...]
    prices: Tuple[PriceObservation, ...]
    provenance: Tuple[SourceFile, ...] = ()
    unvalued_count: int = field(default=0, compare=False)

    def __post_init__(self):
        for earlier, later in zip(self.transfers, self.transfers[1:]):
            if later.date < earlier.date:
                raise DataError("Transfers must be sorted by date")
        for earlier, later in zip(self.prices, self.prices[1:]):
            if later.date < earlier.date:
                raise DataError("Prices must be sorted by date")
        ids = [t.id for t in self.transfers]
        if len(set(ids)) != len(ids):
            raise DataError("Duplicate transfer ids in dataset")

    @property
    def valued_transfers(self) -> Tuple[TransferRecord, ...]:
        return tuple(t for t in self.transfers if t.value_eur is not None)

    def secondary_prices(self) -> Tuple[PriceObservation, ...]:
        return tuple(p for p in self.prices if p.market is Market.SECONDARY)
