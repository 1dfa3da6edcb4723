"""
Exception hierarchy for the carbon market toolkit
Every error carries the exit code the command-line runner maps it to
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence


class CarbonMarketError(Exception):
    """Base class for all errors raised by this project"""

    exit_code = 1


class UsageError(CarbonMarketError):
    """Bad flags, bad config keys, or an invalid combination of options"""

    exit_code = 1


class InvalidParameterError(CarbonMarketError, ValueError):
    """A numerical routine was called with parameters outside its domain"""

    exit_code = 1


# Data errors (exit code 2)


class DataError(CarbonMarketError, ValueError):
    """Input data is missing, malformed, or too thin for the analysis"""

    exit_code = 2


class MissingInputError(DataError):
    """A referenced input file does not exist"""


class SchemaMismatchError(DataError):
    """CSV header does not match the documented schema"""


@dataclass(frozen=True)
class RowIssue:
    """One rejected CSV row, numbered as the line in the file (header = 1)"""

    row_number: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row_number}: {self.message}"


class MalformedRowError(DataError):
    """One or more rows failed validation while parsing in strict mode"""

    def __init__(self, path: str, issues: Sequence[RowIssue]):
        self.path = path
        self.issues: List[RowIssue] = list(issues)
        preview = "; ".join(str(issue) for issue in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(
            f"{len(self.issues)} malformed row(s) in {path}: {preview}{more}"
        )


class InsufficientDataError(DataError):
    """Not enough observations for the requested computation"""


class ZeroVarianceError(DataError):
    """A series that must vary is constant"""


class OutsideWindowError(DataError):
    """A date falls outside the study window"""


class EmptyNetworkError(DataError):
    """No valued transfers (or no positive weight) to build a network from"""


# Numerical errors (exit code 3)


class NumericalError(CarbonMarketError, ArithmeticError):
    """A numerical procedure failed"""

    exit_code = 3


class RankDeficientError(NumericalError):
    """Design matrix does not have full column rank"""


class NonFiniteError(NumericalError):
    """A computation produced NaN or infinity"""


class ConvergenceError(NumericalError):
    """An iterative method did not converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class GarchFitError(ConvergenceError):
    """Every optimizer start failed to produce a finite GARCH optimum"""
