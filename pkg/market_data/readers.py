"""
CSV readers for transaction and price files
Rows failing validation are collected with their line numbers; strict mode
turns any rejected row into a fatal error, lenient mode skips and reports
"""

import os
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import pandas as pd

from market_data.types import (
    AccountClass,
    Market,
    PriceObservation,
    RegistryCode,
    SourceFile,
    TransferRecord,
)
from utils import console
from utils.errors import (
    DataError,
    MalformedRowError,
    MissingInputError,
    RowIssue,
    SchemaMismatchError,
)
from utils.file_manager import sha256_of

TRANSACTION_COLUMNS = [
    "id",
    "date",
    "from_registry",
    "to_registry",
    "from_class",
    "to_class",
    "quantity",
]
OPTIONAL_TRANSACTION_COLUMNS = ["from_account", "to_account"]
PRICE_COLUMNS = ["date", "market", "price"]

T = TypeVar("T")

# First field of a placeholder row standing in for a line with too many fields
_OVERSIZED = "\x00oversized:"


def _parse_date(raw: str) -> date:
    try:
        return datetime.strptime(raw.strip(), "%Y-%m-%d").date()
    except ValueError:
        raise DataError(f"bad date {raw!r} (expected YYYY-MM-DD)") from None


def _parse_quantity(raw: str) -> int:
    """Exact integer quantity; "100" and "100.0" parse, "100.5" does not"""
    try:
        number = Decimal(raw.strip())
    except InvalidOperation:
        raise DataError(f"bad quantity {raw!r}") from None
    if not number.is_finite() or number != number.to_integral_value():
        raise DataError(f"quantity {raw!r} is not a whole number of allowances")
    if number <= 0:
        raise DataError(f"quantity {raw!r} must be positive")
    return int(number)


def _parse_price(raw: str) -> float:
    try:
        price = float(raw)
    except ValueError:
        raise DataError(f"bad price {raw!r}") from None
    if not price > 0:
        raise DataError(f"price {raw!r} must be positive")
    return price


def _read_frame(
    path: str, required: Sequence[str], column_map: Optional[Dict[str, str]]
) -> pd.DataFrame:
    if not os.path.exists(path):
        raise MissingInputError(
            f"Input file not found: {path}\nPlease check the path in your flags or config."
        )
    try:
        header = pd.read_csv(path, nrows=0, encoding="utf-8", encoding_errors="replace")
        width = len(header.columns)

        def oversized(fields: List[str]) -> List[str]:
            return [f"{_OVERSIZED}{len(fields)}:{width}"] + [""] * (width - 1)

        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
            encoding_errors="replace",
            engine="python",
            on_bad_lines=oversized,
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"{path} could not be read as CSV: {e}") from None
    except OSError as e:
        raise DataError(f"Could not read {path}: {e}") from None
    if not isinstance(frame.index, pd.RangeIndex):
        # pandas turns extra leading fields on the first data line into an index
        raise DataError(f"{path}: line 2 has more fields than the header ({width})")
    frame = frame.fillna("")
    frame.columns = [c.strip() for c in frame.columns]
    if column_map:
        frame = frame.rename(columns=column_map)
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaMismatchError(
            f"{path}: missing column(s) {', '.join(missing)}; "
            f"expected header {','.join(required)}"
        )
    return frame


def _check_raw(row: Dict[str, str]) -> None:
    """Reject rows the CSV layer could only partly read"""
    values = list(row.values())
    if values and values[0].startswith(_OVERSIZED):
        seen, expected = values[0][len(_OVERSIZED) :].split(":")
        raise DataError(f"expected {expected} fields, saw {seen}")
    if any("\ufffd" in value for value in values):
        raise DataError("invalid UTF-8 bytes (re-save the file as UTF-8)")


def _collect(
    path: str,
    frame: pd.DataFrame,
    build: Callable[[Dict[str, str]], T],
    strict: bool,
) -> Tuple[List[Tuple[int, T]], List[RowIssue]]:
    records: List[Tuple[int, T]] = []
    issues: List[RowIssue] = []
    for offset, row in enumerate(frame.to_dict("records")):
        row_number = offset + 2  # header is line 1
        try:
            _check_raw(row)
            records.append((row_number, build(row)))
        except DataError as e:
            issues.append(RowIssue(row_number, str(e)))

    if issues and strict:
        raise MalformedRowError(path, issues)
    if issues:
        console.warn(f"Skipped {len(issues)} malformed row(s) in {path}")
        for issue in issues[:10]:
            console.warn(f"  {issue}")
    return records, issues


def _build_transfer(row: Dict[str, str]) -> TransferRecord:
    transfer_id = row["id"].strip()
    if not transfer_id:
        raise DataError("empty id")
    return TransferRecord(
        id=transfer_id,
        date=_parse_date(row["date"]),
        from_registry=RegistryCode(row["from_registry"]),
        to_registry=RegistryCode(row["to_registry"]),
        from_class=AccountClass.parse(row["from_class"]),
        to_class=AccountClass.parse(row["to_class"]),
        quantity=_parse_quantity(row["quantity"]),
        from_account=(row.get("from_account") or "").strip() or None,
        to_account=(row.get("to_account") or "").strip() or None,
    )


def _build_price(row: Dict[str, str]) -> PriceObservation:
    return PriceObservation(
        date=_parse_date(row["date"]),
        market=Market.parse(row["market"]),
        price=_parse_price(row["price"]),
    )


def read_transactions(
    path: str, strict: bool = False, column_map: Optional[Dict[str, str]] = None
) -> Tuple[List[TransferRecord], SourceFile]:
    """Parse a transactions CSV, returning records sorted by (date, id)"""
    frame = _read_frame(path, TRANSACTION_COLUMNS, column_map)
    records, _ = _collect(path, frame, _build_transfer, strict)

    seen = set()
    unique: List[TransferRecord] = []
    duplicates: List[RowIssue] = []
    for row_number, record in records:
        if record.id in seen:
            duplicates.append(RowIssue(row_number, f"duplicate id {record.id!r}"))
            continue
        seen.add(record.id)
        unique.append(record)
    if duplicates:
        if strict:
            raise MalformedRowError(path, duplicates)
        console.warn(f"Dropped {len(duplicates)} duplicate transfer id(s) in {path}")

    unique.sort(key=lambda t: (t.date, t.id))
    source = SourceFile(path, sha256_of(path), len(frame), len(unique))
    console.log_operation("ingest", "Parsed transactions", f"{len(unique)}/{len(frame)} rows")
    return unique, source


def read_prices(
    path: str, strict: bool = False, column_map: Optional[Dict[str, str]] = None
) -> Tuple[List[PriceObservation], SourceFile]:
    """Parse a prices CSV, returning observations sorted by (date, market, price)"""
    frame = _read_frame(path, PRICE_COLUMNS, column_map)
    numbered, _ = _collect(path, frame, _build_price, strict)
    records = [record for _, record in numbered]
    records.sort(key=lambda p: (p.date, p.market.value, p.price))
    source = SourceFile(path, sha256_of(path), len(frame), len(records))
    console.log_operation("ingest", "Parsed prices", f"{len(records)}/{len(frame)} rows")
    return records, source


def parse_transactions(
    path: str, strict: bool = False, column_map: Optional[Dict[str, str]] = None
) -> List[TransferRecord]:
    return read_transactions(path, strict, column_map)[0]


def parse_prices(
    path: str, strict: bool = False, column_map: Optional[Dict[str, str]] = None
) -> List[PriceObservation]:
    return read_prices(path, strict, column_map)[0]
