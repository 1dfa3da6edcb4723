#!/usr/bin/env python3
"""
Carbon Market Analysis
Command-line runner for the allowance-market pipeline: ingest, descriptive
summaries, stationarity and ARCH tests, rolling forecasts, trade-network
centrality and price elasticities
"""

import argparse
import sys
from dataclasses import dataclass, field
from datetime import date
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from analysis.correlation import correlogram
from analysis.elasticity import (
    elasticity_graph,
    elasticity_report,
    scatter_frame,
)
from analysis.forecast import evaluate, rolling_forecast
from analysis.hypothesis_tests import TestResult, adf_test, arch_lm_test
from analysis.network import (
    Aggregation,
    adjacency_frame,
    build_annual_network,
    centrality_frame,
    centrality_metadata,
    centrality_timeseries,
    eigenvector_centrality,
    export_network,
    network_frame,
    normalize,
    years_covered,
)
from market_data.ingest import (
    aggregate_weekly,
    enrich_values,
    filter_compliance_flows,
    load_dataset,
    log_returns,
    period_price_levels,
    returns_frame,
    summarize_flows,
    transfers_frame,
    weekly_frame,
)
from market_data.synthetic import (
    DEFAULT_END,
    DEFAULT_REGISTRIES,
    DEFAULT_START,
    generate_synthetic_market,
)
from market_data.types import Dataset, ReturnSeries, WeeklyPriceSeries
from utils import console
from utils.config import RunConfig, build_config
from utils.errors import CarbonMarketError, EmptyNetworkError, NumericalError, UsageError
from utils.file_manager import ArtifactWriter

# Import version info
try:
    from version import __version__
except ImportError:
    __version__ = "unknown"

SUBCOMMANDS = (
    "ingest",
    "summary",
    "test",
    "forecast",
    "network",
    "centrality",
    "elasticity",
    "all",
    "synthesize",
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with code 2"""

    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{message}\nRun with --help for usage.")


def _csv_list(raw: str) -> List[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _registry_list(raw: str) -> List[str]:
    return [item.upper() for item in _csv_list(raw)]


def _iso_date(raw: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {raw!r} (expected YYYY-MM-DD)") from None


def _flag(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    parser.add_argument(name, action="store_const", const=True, default=None, help=help_text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--transactions", help="transactions CSV")
    parser.add_argument("--prices", help="prices CSV")
    parser.add_argument("--output-dir", dest="output_dir", help="directory for results")
    parser.add_argument("--config", dest="config_path", help="JSON config file (flat keys)")
    parser.add_argument("--seed", type=int, help="random seed (default 42)")
    parser.add_argument(
        "--output-format", dest="output_format", choices=["csv", "json", "both"]
    )
    _flag(parser, "--quiet", "suppress progress lines")
    _flag(parser, "--strict", "treat any malformed input row as fatal")
    _flag(parser, "--cross-class-only", "keep only OHA→PHA and PHA→OHA transfers")
    parser.add_argument("--max-gap-days", dest="max_gap_days", type=int)
    parser.add_argument("--breakpoints", type=_csv_list, help="period breakpoints YYYY-MM-DD,...")
    parser.add_argument("--period-labels", dest="period_labels", type=_csv_list)


def _add_test_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--adf-regression", dest="adf_regression", choices=["n", "c", "ct"])
    parser.add_argument("--adf-max-lag", dest="adf_max_lag", type=int)
    parser.add_argument("--arch-lags", dest="arch_lags", type=int)
    parser.add_argument("--significance", type=float)
    parser.add_argument("--correlogram-lags", dest="correlogram_lags", type=int)


def _add_forecast_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, help="rolling window in weeks (default 104)")
    parser.add_argument("--ar-order", dest="ar_order", type=int, help="AR order (default 3)")
    parser.add_argument(
        "--variance-init", dest="variance_init", choices=["sample", "unconditional"]
    )


def _add_network_flags(parser: argparse.ArgumentParser, thresholds: bool) -> None:
    parser.add_argument("--year", type=int, help="single year (default: every year)")
    if thresholds:
        parser.add_argument("--edge-threshold", dest="edge_threshold", type=float)
        parser.add_argument("--node-threshold", dest="node_threshold", type=float)
    parser.add_argument("--aggregation", choices=["mean", "sum"])
    _flag(parser, "--transpose", "score registries by incoming instead of outgoing weight")
    parser.add_argument("--damping", type=float, help="constant added to every entry")


def _add_elasticity_flags(parser: argparse.ArgumentParser, significance: bool) -> None:
    parser.add_argument("--registries", type=_registry_list, help="e.g. FR,DE,GB")
    parser.add_argument("--method", choices=["ols", "lad", "both"])
    parser.add_argument("--bootstrap-reps", dest="bootstrap_reps", type=int)
    parser.add_argument("--min-n", dest="min_n", type=int)
    parser.add_argument(
        "--quantity-aggregation", dest="quantity_aggregation", choices=["sum", "mean"]
    )
    if significance:
        parser.add_argument("--significance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="carbon_market.py",
        description="Allowance-market analysis pipeline",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    subparsers.required = True

    helps = {
        "ingest": "parse, filter and value transfers; weekly prices and returns",
        "summary": "flow shares per account-class pair and registry",
        "test": "ADF and ARCH-LM tests, correlogram",
        "forecast": "rolling AR+GARCH one-step forecasts and metrics",
        "network": "annual trade networks and DOT export",
        "centrality": "eigenvector centrality per year",
        "elasticity": "OLS and LAD log-log price elasticities",
        "all": "every stage in dependency order",
    }
    for name, help_text in helps.items():
        sub = subparsers.add_parser(name, help=help_text)
        _add_common(sub)
        if name in ("test", "all"):
            _add_test_flags(sub)
        if name in ("forecast", "all"):
            _add_forecast_flags(sub)
        if name in ("network", "all"):
            _add_network_flags(sub, thresholds=True)
        if name == "centrality":
            _add_network_flags(sub, thresholds=False)
        if name in ("elasticity", "all"):
            _add_elasticity_flags(sub, significance=name == "elasticity")

    synth = subparsers.add_parser("synthesize", help="write a seeded synthetic dataset")
    synth.add_argument("--output-dir", dest="output_dir", required=True)
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--start", type=_iso_date, default=DEFAULT_START)
    synth.add_argument("--end", type=_iso_date, default=DEFAULT_END)
    synth.add_argument(
        "--registries", type=_registry_list, default=list(DEFAULT_REGISTRIES)
    )
    _flag(synth, "--quiet", "suppress progress lines")
    return parser


@dataclass
class RunContext:
    """Data shared by the stages of one run"""

    config: RunConfig
    raw: Dataset
    dataset: Dataset
    writer: ArtifactWriter
    _weekly: Optional[WeeklyPriceSeries] = None
    _returns: Optional[ReturnSeries] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def weekly(self) -> WeeklyPriceSeries:
        if self._weekly is None:
            self._weekly = aggregate_weekly(self.dataset.prices)
        return self._weekly

    @property
    def returns(self) -> ReturnSeries:
        if self._returns is None:
            self._returns = log_returns(self.weekly)
        return self._returns


def prepare_dataset(config: RunConfig) -> Tuple[Dataset, Dataset]:
    """Raw parsed inputs and the filtered, valued compliance dataset"""
    seg = config.segmentation()
    raw = load_dataset(config.transactions, config.prices, config.strict, config.column_map)
    filtered = filter_compliance_flows(
        raw, seg.start, seg.end, cross_class_only=config.cross_class_only
    )
    return raw, enrich_values(filtered, config.max_gap_days)


# Stages


def stage_ingest(ctx: RunContext) -> None:
    console.progress("Writing ingested data...")
    ctx.writer.write_table("transfers", transfers_frame(ctx.dataset))
    ctx.writer.write_table("weekly_prices", weekly_frame(ctx.weekly))
    ctx.writer.write_table("returns", returns_frame(ctx.returns))
    ctx.writer.write_json(
        "ingest_summary.json",
        {
            "inputs": [source.to_dict() for source in ctx.raw.provenance],
            "transfers_parsed": len(ctx.raw.transfers),
            "compliance_transfers": len(ctx.dataset.transfers),
            "unvalued_transfers": ctx.dataset.unvalued_count,
            "prices_parsed": len(ctx.raw.prices),
            "weeks": len(ctx.weekly),
            "returns": len(ctx.returns),
        },
    )
    console.success(
        f"Ingested {len(ctx.dataset.transfers)} compliance transfers, {len(ctx.weekly)} weeks"
    )


def stage_summary(ctx: RunContext) -> None:
    summary = summarize_flows(ctx.dataset)
    ctx.writer.write_table("flow_pairs", summary.pairs)
    ctx.writer.write_table("flow_registries", summary.registries)
    ctx.writer.write_table(
        "period_price_levels", period_price_levels(ctx.weekly, ctx.config.segmentation())
    )
    console.success(f"Summarized {len(summary.pairs)} account-class pair(s)")


def _conclusion_text(result: TestResult) -> str:
    if result.name == "ADF":
        return (
            "Stationary in mean (reject H0)"
            if result.rejected
            else "Unit root not rejected (fail to reject H0)"
        )
    return (
        "ARCH effects present (reject H0)"
        if result.rejected
        else "No ARCH effects detected (fail to reject H0)"
    )


def print_test_table(results: Sequence[TestResult]) -> None:
    names = {"ADF": "Augmented Dickey-Fuller", "ARCH-LM": "Engle's ARCH test"}
    print(f"{'Test':<26}{'Statistic':>12}{'p-value':>12}{'Lags':>6}  Conclusion")
    for result in results:
        print(
            f"{names[result.name]:<26}{result.statistic:>12.4f}{result.p_value:>12.3g}"
            f"{result.lags_used:>6}  {_conclusion_text(result)}"
        )


def stage_test(ctx: RunContext) -> None:
    config = ctx.config
    values = ctx.returns.values
    console.progress(f"Testing {len(values)} weekly returns...")
    adf = adf_test(
        values,
        max_lag=config.adf_max_lag,
        regression=config.adf_regression,
        significance=config.significance,
    )
    arch = arch_lm_test(values - values.mean(), config.arch_lags, config.significance)
    ctx.writer.write_json("tests.json", {"adf": adf.to_dict(), "arch_lm": arch.to_dict()})
    ctx.writer.write_table("correlogram", correlogram(values, config.correlogram_lags))
    print_test_table([adf, arch])
    console.success("Stationarity and heteroskedasticity tests complete")


def stage_forecast(ctx: RunContext) -> None:
    config = ctx.config
    result = rolling_forecast(ctx.returns, config.window, config.ar_order, config.variance_init)
    metrics = evaluate(result)
    ctx.writer.write_table("forecast_steps", result.to_frame())
    ctx.writer.write_json(
        "forecast_metrics.json",
        {
            "metrics": metrics.to_dict(),
            "window": result.window,
            "ar_order": result.ar_order,
            "variance_init": result.variance_init,
            "flagged_steps": result.flagged_count,
        },
    )
    console.success(
        f"Forecast: RMSE {metrics.rmse:.6f}, DA {metrics.directional_accuracy:.2%}, "
        f"HR {metrics.hit_rate:.2%}"
    )


def _network_years(ctx: RunContext) -> List[int]:
    if ctx.config.year is not None:
        return [ctx.config.year]
    return years_covered(ctx.dataset)


def stage_network(ctx: RunContext) -> None:
    config = ctx.config
    aggregation = Aggregation.parse(config.aggregation)
    years = _network_years(ctx)
    if not years:
        raise EmptyNetworkError("No valued transfers to build a trade network from")
    weights = []
    per_year: Dict[str, Dict[str, object]] = {}
    for year in years:
        net = build_annual_network(ctx.dataset, year, aggregation)
        adjacency = normalize(net)
        weights.append(network_frame(net))
        ctx.writer.write_text(
            f"network_{year}.dot",
            export_network(net, config.edge_threshold, config.node_threshold),
        )
        ctx.writer.write_table(f"adjacency_{year}", adjacency_frame(adjacency), index=True)
        try:
            result = eigenvector_centrality(
                adjacency, transpose=config.transpose, damping=config.damping
            )
        except NumericalError as e:
            console.warn(f"Centrality for {year} skipped: {e}")
            per_year[str(year)] = {"error": str(e)}
            continue
        ctx.writer.write_table(f"centrality_{year}", centrality_frame(result, year))
        per_year[str(year)] = centrality_metadata(result)
    ctx.writer.write_table("network_weights", pd.concat(weights, ignore_index=True))
    ctx.writer.write_json(
        "network_meta.json",
        {
            "aggregation": config.aggregation,
            "edge_threshold": config.edge_threshold,
            "node_threshold": config.node_threshold,
            "transpose": config.transpose,
            "damping": config.damping,
            "years": per_year,
        },
    )
    console.success(f"Exported {len(weights)} annual network(s)")


def stage_centrality(ctx: RunContext) -> None:
    config = ctx.config
    series = centrality_timeseries(
        ctx.dataset,
        _network_years(ctx),
        Aggregation.parse(config.aggregation),
        transpose=config.transpose,
        damping=config.damping,
    )
    ctx.writer.write_table("centrality", series.table)
    ctx.writer.write_json(
        "centrality_meta.json",
        {
            "aggregation": config.aggregation,
            "transpose": config.transpose,
            "damping": config.damping,
            "failures": {str(year): message for year, message in series.failures.items()},
        },
    )
    console.success(f"Centrality for {series.table['year'].nunique()} year(s)")


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in label)


def stage_elasticity(ctx: RunContext) -> None:
    config = ctx.config
    seg = config.segmentation()
    report = elasticity_report(
        ctx.dataset,
        seg,
        registries=config.registries,
        methods=config.methods(),
        bootstrap_reps=config.bootstrap_reps,
        seed=config.seed,
        min_n=config.min_n,
        significance=config.significance,
        max_gap_days=config.max_gap_days,
        quantity_aggregation=config.quantity_aggregation,
    )
    ctx.writer.write_table("elasticity", report.table)
    ctx.writer.write_table("elasticity_scatter", scatter_frame(report.observations, report.estimates))
    for period in seg.labels:
        for method in config.methods():
            ctx.writer.write_text(
                f"elasticity_{_slug(period)}_{method.lower()}.dot",
                elasticity_graph(report.estimates, period, method, sorted(config.registries)),
            )
    console.success(f"Estimated {len(report.estimates)} elasticity cell(s)")


STAGES: Dict[str, List[Callable[[RunContext], None]]] = {
    "ingest": [stage_ingest],
    "summary": [stage_summary],
    "test": [stage_test],
    "forecast": [stage_forecast],
    "network": [stage_network],
    "centrality": [stage_centrality],
    "elasticity": [stage_elasticity],
    "all": [
        stage_ingest,
        stage_summary,
        stage_test,
        stage_forecast,
        stage_network,
        stage_centrality,
        stage_elasticity,
    ],
}


def _cli_overrides(args: argparse.Namespace) -> Dict[str, object]:
    skip = {"subcommand", "config_path"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def run_analysis(subcommand: str, args: argparse.Namespace) -> int:
    config = build_config(_cli_overrides(args), args.config_path)
    console.set_quiet(config.quiet)
    console.banner(f"📈 CARBON MARKET ANALYSIS: {subcommand} (v{__version__})")

    config.require_inputs()
    config.segmentation()
    raw, dataset = prepare_dataset(config)

    writer = ArtifactWriter(config.output_dir, config.output_format)
    ctx = RunContext(config, raw, dataset, writer)
    try:
        for stage in STAGES[subcommand]:
            stage(ctx)
    except BaseException:
        writer.discard()
        raise

    manifest_config = dict(config.analysis_params(), output_format=config.output_format)
    writer.commit(
        subcommand,
        manifest_config,
        config.config_hash(),
        config.seed,
        [source.to_dict() for source in raw.provenance],
        __version__,
    )
    console.success(f"Results in {config.output_dir}")
    return 0


def run_synthesize(args: argparse.Namespace) -> int:
    console.set_quiet(bool(args.quiet))
    market = generate_synthetic_market(args.seed, args.start, args.end, args.registries)
    writer = ArtifactWriter(args.output_dir, "csv")
    writer.write_table("transactions", market.transactions)
    writer.write_table("prices", market.prices)
    writer.write_json(
        "true_elasticities.json",
        {f"{a}->{b}": value for (a, b), value in sorted(market.elasticities.items())},
    )
    writer.commit(
        "synthesize",
        {
            "start": args.start.isoformat(),
            "end": args.end.isoformat(),
            "registries": args.registries,
        },
        "",
        args.seed,
        [],
        __version__,
    )
    console.success(f"Synthetic market written to {args.output_dir}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse flags, run the subcommand, map errors to exit codes"""
    try:
        args = build_parser().parse_args(argv)
        if args.subcommand == "synthesize":
            return run_synthesize(args)
        return run_analysis(args.subcommand, args)
    except CarbonMarketError as e:
        console.error(str(e))
        return e.exit_code
    except KeyboardInterrupt:
        console.error("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
