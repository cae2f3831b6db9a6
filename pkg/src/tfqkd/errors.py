"""Exception types shared across the package."""


class TfqkdError(Exception):
    """Base class for all package errors."""


class DomainError(TfqkdError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EstimationInfeasible(TfqkdError):
    """A decoy-state estimate cannot be formed from the supplied statistics.

    ``bound`` names the quantity whose estimate failed (``"q10"``, ``"lp"``,
    ...), so callers can report which part of the estimation broke.
    """

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class OrderingError(EstimationInfeasible):
    """Fluctuation ranges of adjacent intensities overlap."""


class SaturationError(TfqkdError, ValueError):
    """Click rate too high for the local-detector tomography model."""


class ContractViolation(TfqkdError):
    """A pluggable bound returned a value outside its declared range."""


class ConfigError(TfqkdError):
    """Invalid or unreadable scenario configuration."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
