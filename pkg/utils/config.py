"""
Run configuration
Precedence, lowest to highest: built-in defaults, environment (.env),
JSON config file, command-line flags
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import date, datetime
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from market_data.calendar import PeriodSegmentation, segmentation_from_breakpoints
from utils.errors import InvalidParameterError, MissingInputError, UsageError

DEFAULT_OUTPUT_DIR = "local_data/output"
DEFAULT_SEED = 42

ENV_OUTPUT_DIR = "CARBON_MARKET_OUTPUT_DIR"
ENV_SEED = "CARBON_MARKET_SEED"
ENV_CONFIG = "CARBON_MARKET_CONFIG"

# Keys that describe where things go rather than what is computed
_NON_ANALYSIS_KEYS = {"output_dir", "quiet", "output_format"}


@dataclass(frozen=True)
class RunConfig:
    """Every analysis parameter with its documented default"""

    # inputs and outputs
    transactions: Optional[str] = None
    prices: Optional[str] = None
    output_dir: str = DEFAULT_OUTPUT_DIR
    output_format: str = "both"
    quiet: bool = False
    seed: int = DEFAULT_SEED

    # ingest
    strict: bool = False
    column_map: Dict[str, str] = field(default_factory=dict)
    cross_class_only: bool = False
    max_gap_days: int = 7
    breakpoints: List[str] = field(default_factory=lambda: ["2013-01-01", "2018-01-01"])
    period_labels: Optional[List[str]] = None

    # tests
    adf_regression: str = "c"
    adf_max_lag: Optional[int] = None
    arch_lags: int = 5
    significance: float = 0.05
    correlogram_lags: int = 52

    # forecast
    window: int = 104
    ar_order: int = 3
    variance_init: str = "sample"

    # network
    year: Optional[int] = None
    edge_threshold: float = 0.0
    node_threshold: float = 0.0
    aggregation: str = "mean"
    transpose: bool = False
    damping: float = 0.0

    # elasticity
    registries: List[str] = field(default_factory=lambda: ["FR", "DE", "GB"])
    method: str = "both"
    bootstrap_reps: int = 999
    min_n: int = 30
    quantity_aggregation: str = "sum"

    def analysis_params(self) -> Dict[str, Any]:
        """Parameters that determine results (output location excluded)"""
        return {k: v for k, v in asdict(self).items() if k not in _NON_ANALYSIS_KEYS}

    def config_hash(self) -> str:
        canonical = json.dumps(self.analysis_params(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def segmentation(self) -> PeriodSegmentation:
        breakpoints = [_parse_date("breakpoints", raw) for raw in self.breakpoints]
        try:
            return segmentation_from_breakpoints(breakpoints, self.period_labels)
        except InvalidParameterError as e:
            raise UsageError(str(e)) from None

    def require_inputs(self) -> None:
        """Check both input files are configured and exist"""
        for name in ("transactions", "prices"):
            path = getattr(self, name)
            if not path:
                raise UsageError(
                    f"No {name} file given.\nPass --{name} PATH or set '{name}' in the config file."
                )
            if not os.path.exists(path):
                raise MissingInputError(
                    f"Input file not found: {path}\nPlease check --{name} or your config file."
                )

    def methods(self) -> List[str]:
        return ["OLS", "LAD"] if self.method == "both" else [self.method.upper()]


_CHOICES = {
    "output_format": ("csv", "json", "both"),
    "adf_regression": ("n", "c", "ct"),
    "variance_init": ("sample", "unconditional"),
    "aggregation": ("mean", "sum"),
    "method": ("ols", "lad", "both"),
    "quantity_aggregation": ("sum", "mean"),
}


def _parse_date(name: str, raw: str) -> date:
    try:
        return datetime.strptime(str(raw), "%Y-%m-%d").date()
    except ValueError:
        raise UsageError(f"{name}: bad date {raw!r} (expected YYYY-MM-DD)") from None


def _check_value(name: str, value: Any) -> Any:
    """Validate one config value against the type of its default"""
    sample = getattr(RunConfig(), name)
    if value is None:
        if sample is None or name in ("transactions", "prices"):
            return None
        raise UsageError(f"Config key '{name}' cannot be null")

    if name in ("transactions", "prices", "output_dir") or isinstance(sample, str):
        if not isinstance(value, str):
            raise UsageError(f"Config key '{name}' must be a string, got {value!r}")
    elif isinstance(sample, bool):
        if not isinstance(value, bool):
            raise UsageError(f"Config key '{name}' must be true or false, got {value!r}")
    elif isinstance(sample, int) or name in ("adf_max_lag", "year"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise UsageError(f"Config key '{name}' must be an integer, got {value!r}")
    elif isinstance(sample, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise UsageError(f"Config key '{name}' must be a number, got {value!r}")
        value = float(value)
    elif isinstance(sample, dict):
        if not isinstance(value, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in value.items()
        ):
            raise UsageError(f"Config key '{name}' must map column names to column names")
    elif isinstance(sample, list) or name == "period_labels":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise UsageError(f"Config key '{name}' must be a list of strings, got {value!r}")

    if name in _CHOICES and value not in _CHOICES[name]:
        raise UsageError(
            f"Config key '{name}' must be one of {', '.join(_CHOICES[name])}, got {value!r}"
        )
    return value


def _merge(config: RunConfig, overrides: Dict[str, Any], source: str) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise UsageError(f"Unknown key(s) in {source}: {', '.join(unknown)}")
    checked = {name: _check_value(name, value) for name, value in overrides.items()}
    return replace(config, **checked)


def load_config_file(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise UsageError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise UsageError(f"Config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise UsageError(f"Config file {path} must hold a JSON object of flat keys")
    return data


def environment_overrides() -> Dict[str, Any]:
    """Read settings from the environment, loading .env first"""
    load_dotenv()
    overrides: Dict[str, Any] = {}
    output_dir = os.getenv(ENV_OUTPUT_DIR)
    if output_dir:
        overrides["output_dir"] = output_dir
    seed = os.getenv(ENV_SEED)
    if seed:
        try:
            overrides["seed"] = int(seed)
        except ValueError:
            raise UsageError(f"{ENV_SEED} must be an integer, got {seed!r}") from None
    return overrides


def build_config(
    cli_overrides: Dict[str, Any], config_path: Optional[str] = None
) -> RunConfig:
    """
    Resolve the run configuration from all sources

    Args:
        cli_overrides: flag values; None means "not given on the command line"
        config_path: --config value, falling back to CARBON_MARKET_CONFIG
    """
    config = _merge(RunConfig(), environment_overrides(), "environment")
    config_path = config_path or os.getenv(ENV_CONFIG)
    if config_path:
        config = _merge(config, load_config_file(config_path), config_path)
    given = {k: v for k, v in cli_overrides.items() if v is not None}
    return _merge(config, given, "command-line flags")
