"""
Registry-level trade networks and eigenvector centrality

Each year's network has one node per participating registry. The weight
from registry i to registry j aggregates the EUR value of that year's
transfers from i to j; the diagonal holds domestic (self) trade.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from market_data.types import Dataset, RegistryCode
from utils import console
from utils.dot_writer import DotGraph
from utils.errors import (
    ConvergenceError,
    DataError,
    EmptyNetworkError,
    InvalidParameterError,
    NumericalError,
)

DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITER = 10_000
DEFAULT_NODE_WIDTH = 0.75


class Aggregation(Enum):
    SUM = "sum"
    MEAN = "mean"

    @classmethod
    def parse(cls, raw: str) -> "Aggregation":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            raise InvalidParameterError(
                f"Unknown aggregation {raw!r} (expected sum or mean)"
            ) from None


@dataclass(frozen=True, eq=False)
class TradeNetwork:
    year: int
    nodes: Tuple[RegistryCode, ...]
    weights: np.ndarray = field(repr=False)
    aggregation: Aggregation = Aggregation.MEAN

    def __post_init__(self):
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise InvalidParameterError(f"Duplicate registries in network {self.nodes}")
        if self.weights.shape != (n, n):
            raise InvalidParameterError(
                f"Weight matrix shape {self.weights.shape} does not match {n} nodes"
            )
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidParameterError("Network weights must be finite and nonnegative")

    def weight(self, source: str, target: str) -> float:
        return float(self.weights[self.nodes.index(source), self.nodes.index(target)])


def build_annual_network(
    ds: Dataset, year: int, aggregation: Aggregation = Aggregation.MEAN
) -> TradeNetwork:
    """
    Aggregate one year's valued transfers per ordered registry pair

    MEAN gives the average value per transaction, SUM the total. Only
    registries with at least one valued transfer that year appear.
    """
    transfers = [t for t in ds.valued_transfers if t.date.year == year]
    if not transfers:
        raise EmptyNetworkError(f"No valued transfers in {year}; cannot build a network")

    nodes = tuple(sorted({t.from_registry for t in transfers} | {t.to_registry for t in transfers}))
    index = {code: i for i, code in enumerate(nodes)}
    totals = np.zeros((len(nodes), len(nodes)))
    counts = np.zeros((len(nodes), len(nodes)))
    for t in transfers:
        i, j = index[t.from_registry], index[t.to_registry]
        totals[i, j] += t.value_eur
        counts[i, j] += 1

    if aggregation is Aggregation.SUM:
        weights = totals
    else:
        weights = np.divide(totals, counts, out=np.zeros_like(totals), where=counts > 0)
    return TradeNetwork(year, nodes, weights, aggregation)


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Weights divided by the largest entry, diagonal included"""

    nodes: Tuple[RegistryCode, ...]
    matrix: np.ndarray = field(repr=False)


def normalize(net: TradeNetwork) -> NormalizedAdjacency:
    peak = float(net.weights.max()) if net.weights.size else 0.0
    if peak <= 0:
        raise EmptyNetworkError(f"Network for {net.year} has no positive weight")
    return NormalizedAdjacency(net.nodes, net.weights / peak)


@dataclass(frozen=True, eq=False)
class CentralityResult:
    nodes: Tuple[RegistryCode, ...]
    x: np.ndarray
    eigenvalue: float
    proportions: np.ndarray
    iterations: int
    converged: bool
    transpose: bool = False
    damping: float = 0.0

    def proportion_of(self, registry: str) -> float:
        return float(self.proportions[self.nodes.index(registry)])


def eigenvector_centrality(
    A: NormalizedAdjacency,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    transpose: bool = False,
    damping: float = 0.0,
) -> CentralityResult:
    """
    Dominant eigenvector by power iteration, x_i ∝ Σ_j A_ij x_j

    Starts from the uniform vector and L2-normalizes every sweep; stops
    when successive iterates differ by less than ``tol``. ``transpose``
    scores nodes by incoming weight instead. ``damping`` adds a constant
    to every entry, making the matrix strictly positive.

    Raises:
        ConvergenceError: no convergence within ``max_iter`` sweeps
    """
    if tol <= 0 or max_iter < 1:
        raise InvalidParameterError(f"Need tol > 0 and max_iter >= 1 (tol={tol}, max_iter={max_iter})")
    if damping < 0:
        raise InvalidParameterError(f"Damping must be nonnegative, got {damping}")
    matrix = A.matrix.T if transpose else A.matrix
    if damping:
        matrix = matrix + damping
    if np.any(matrix < 0) or not np.any(matrix > 0):
        raise InvalidParameterError("Centrality needs a nonnegative matrix with a positive entry")

    n = matrix.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    delta = math.inf
    for iteration in range(1, max_iter + 1):
        y = matrix @ x
        norm = float(np.linalg.norm(y))
        if norm == 0:
            raise ConvergenceError(
                "Power iteration collapsed to the zero vector (nilpotent structure)",
                {"iterations": iteration},
            )
        y /= norm
        delta = float(np.linalg.norm(y - x))
        x = y
        if delta < tol:
            eigenvalue = float(x @ (matrix @ x))
            return CentralityResult(
                nodes=A.nodes,
                x=x,
                eigenvalue=eigenvalue,
                proportions=x**2,
                iterations=iteration,
                converged=True,
                transpose=transpose,
                damping=damping,
            )

    raise ConvergenceError(
        f"Power iteration did not converge in {max_iter} iterations "
        f"(last change {delta:.3e}); the network may be reducible or periodic, "
        "try --damping",
        {"iterations": max_iter, "last_delta": delta},
    )


@dataclass(frozen=True)
class CentralityTimeseries:
    table: pd.DataFrame
    failures: Dict[int, str]


def centrality_timeseries(
    ds: Dataset,
    years: Iterable[int],
    aggregation: Aggregation = Aggregation.MEAN,
    transpose: bool = False,
    damping: float = 0.0,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CentralityTimeseries:
    """
    Centrality proportions per (year, registry)

    Every registry seen in any requested year gets a row for each
    successful year, with proportion 0 when it did not trade. Failed years
    are reported in ``failures`` and do not stop the others.
    """
    years = sorted(set(years))
    results: Dict[int, CentralityResult] = {}
    failures: Dict[int, str] = {}
    for year in years:
        try:
            net = build_annual_network(ds, year, aggregation)
            results[year] = eigenvector_centrality(
                normalize(net), tol, max_iter, transpose, damping
            )
        except (DataError, NumericalError) as e:
            failures[year] = str(e)
            console.warn(f"Centrality for {year} skipped: {e}")

    registries = sorted({code for result in results.values() for code in result.nodes})
    rows = []
    for year, result in sorted(results.items()):
        by_code = dict(zip(result.nodes, zip(result.x, result.proportions)))
        for code in registries:
            x, proportion = by_code.get(code, (0.0, 0.0))
            rows.append(
                {
                    "year": year,
                    "registry": str(code),
                    "centrality": float(x),
                    "proportion": float(proportion),
                    "eigenvalue": result.eigenvalue,
                }
            )
    table = pd.DataFrame(
        rows, columns=["year", "registry", "centrality", "proportion", "eigenvalue"]
    )
    console.log_operation(
        "centrality", "Computed centrality", f"{len(results)} year(s), {len(failures)} failed"
    )
    return CentralityTimeseries(table, failures)


def export_network(
    net: TradeNetwork, edge_threshold: float = 0.0, node_threshold: float = 0.0
) -> str:
    """
    DOT digraph of a network with thresholds on edges and node sizing

    Every registry is a node. A node whose self-trade weight is positive
    and exceeds ``node_threshold`` gets the default width times
    1 + √(weight / largest self-trade), so the biggest domestic market is
    twice the default; other nodes keep the default width.
    Off-diagonal edges are drawn when their weight is positive and at
    least ``edge_threshold``.
    """
    if edge_threshold < 0 or node_threshold < 0:
        raise InvalidParameterError("Thresholds must be nonnegative")
    graph = DotGraph(f"trade_{net.year}", {"label": f"{net.year} ({net.aggregation.value})"})
    diagonal = np.diag(net.weights)
    peak_self = float(diagonal.max()) if diagonal.size else 0.0
    for code, self_weight in zip(net.nodes, diagonal):
        width = DEFAULT_NODE_WIDTH
        if self_weight > 0 and self_weight > node_threshold:
            width = DEFAULT_NODE_WIDTH * (1 + math.sqrt(self_weight / peak_self))
        graph.add_node(
            str(code),
            label=str(code),
            width=f"{width:.4f}",
            tooltip=f"self-trade {self_weight:.2f}",
        )

    off_diagonal = net.weights * (1 - np.eye(len(net.nodes)))
    peak = float(off_diagonal.max()) if off_diagonal.size else 0.0
    for i, source in enumerate(net.nodes):
        for j, target in enumerate(net.nodes):
            weight = float(net.weights[i, j])
            if i == j or weight <= 0 or weight < edge_threshold:
                continue
            graph.add_edge(
                str(source),
                str(target),
                label=f"{weight:.2f}",
                penwidth=f"{1 + 4 * weight / peak:.3f}",
            )
    return graph.render()


def network_frame(net: TradeNetwork) -> pd.DataFrame:
    """Positive weights as a long (year, from, to, weight) table"""
    rows = [
        {"year": net.year, "from": str(a), "to": str(b), "weight": float(net.weights[i, j])}
        for i, a in enumerate(net.nodes)
        for j, b in enumerate(net.nodes)
        if net.weights[i, j] > 0
    ]
    return pd.DataFrame(rows, columns=["year", "from", "to", "weight"])


def adjacency_frame(A: NormalizedAdjacency) -> pd.DataFrame:
    codes = [str(code) for code in A.nodes]
    return pd.DataFrame(A.matrix, index=pd.Index(codes, name="from"), columns=codes)


def centrality_frame(result: CentralityResult, year: Optional[int] = None) -> pd.DataFrame:
    frame = pd.DataFrame(
        {
            "registry": [str(code) for code in result.nodes],
            "centrality": result.x,
            "proportion": result.proportions,
        }
    )
    if year is not None:
        frame.insert(0, "year", year)
    return frame


def centrality_metadata(result: CentralityResult) -> Dict[str, object]:
    return {
        "eigenvalue": result.eigenvalue,
        "iterations": result.iterations,
        "converged": result.converged,
        "transpose": result.transpose,
        "damping": result.damping,
    }


def years_covered(ds: Dataset) -> List[int]:
    return sorted({t.date.year for t in ds.valued_transfers})
