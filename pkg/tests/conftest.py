"""
Shared pytest fixtures
"""

import os
from datetime import date, timedelta

import pytest

from market_data.calendar import iso_week_of
from market_data.ingest import enrich_values, filter_compliance_flows, load_dataset
from market_data.synthetic import write_synthetic_market
from market_data.types import ReturnSeries
from utils import console

FIXTURES_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep settings from the developer's shell out of the tests"""
    for name in ("CARBON_MARKET_OUTPUT_DIR", "CARBON_MARKET_SEED", "CARBON_MARKET_CONFIG"):
        monkeypatch.delenv(name, raising=False)
    console.set_quiet(True)
    yield
    console.set_quiet(False)


@pytest.fixture
def transactions_csv():
    return os.path.join(FIXTURES_DIR, "transactions.csv")


@pytest.fixture
def prices_csv():
    return os.path.join(FIXTURES_DIR, "prices.csv")


@pytest.fixture
def malformed_csv():
    return os.path.join(FIXTURES_DIR, "malformed_transactions.csv")


@pytest.fixture
def raw_dataset(transactions_csv, prices_csv):
    return load_dataset(transactions_csv, prices_csv)


@pytest.fixture
def fixture_dataset(raw_dataset):
    """Hand-made fixture filtered to compliance flows and valued"""
    return enrich_values(filter_compliance_flows(raw_dataset))


@pytest.fixture(scope="session")
def synthetic_files(tmp_path_factory):
    """(transactions path, prices path) of the seed-42 synthetic market"""
    directory = tmp_path_factory.mktemp("synthetic")
    return write_synthetic_market(str(directory), seed=42)


@pytest.fixture(scope="session")
def synthetic_dataset(synthetic_files):
    return enrich_values(filter_compliance_flows(load_dataset(*synthetic_files)))


def weekly_returns(values, first_monday=date(2010, 1, 4)):
    """Wrap plain numbers as a ReturnSeries on consecutive ISO weeks"""
    weeks = [iso_week_of(first_monday + timedelta(weeks=i)) for i in range(len(values))]
    return ReturnSeries.from_values(weeks, values)


def read_golden(name):
    with open(os.path.join(GOLDEN_DIR, name), "r", encoding="utf-8") as f:
        return f.read()


def check_goldens(outputs):
    """
    Compare each text in ``outputs`` against tests/golden/<name>

    CARBON_MARKET_UPDATE_GOLDEN=1 rewrites the files instead. Missing files
    are written and the test skipped, so new goldens get reviewed before
    they are committed.
    """
    update = os.environ.get("CARBON_MARKET_UPDATE_GOLDEN") == "1"
    created = []
    for name, text in outputs.items():
        path = os.path.join(GOLDEN_DIR, name)
        if update or not os.path.exists(path):
            if not os.path.exists(path):
                created.append(name)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            continue
        assert text == read_golden(name), f"output differs from golden file {name}"
    if created:
        pytest.skip(f"created golden file(s) {', '.join(created)}; review and commit them")


def check_golden(name, text):
    check_goldens({name: text})
