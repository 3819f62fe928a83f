"""Exception types shared across the package.

The CLI maps these onto exit codes: data problems exit 2, fit failures
exit 3, everything else is a bug or a usage error.
"""


class RegimeOgarchError(Exception):
    """Base class for all package errors."""


class ContractError(RegimeOgarchError, ValueError):
    """An argument violates a documented precondition."""


class DataError(RegimeOgarchError):
    """Input data is malformed or unusable."""


class InvalidPriceError(DataError):
    """Price input contains non-positive values."""


class DegenerateAssetError(DataError):
    """An asset has zero variance inside the normalization window."""

    def __init__(self, asset: str):
        self.asset = asset
        super().__init__(f"asset {asset!r} has zero variance in the window")


class InsufficientDataError(DataError):
    """The panel is too short for the requested window layout."""


class NonstationaryError(ContractError):
    """alpha + beta >= 1: the unconditional variance does not exist."""


class FilterDegeneracyError(RegimeOgarchError):
    """The regime filter hit a zero probability or non-positive variance."""


class DegenerateSeriesError(ContractError):
    """A statistic is undefined because the input series is constant."""


class FitFailureError(RegimeOgarchError):
    """Optimization did not converge; carries the best point found."""

    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)
