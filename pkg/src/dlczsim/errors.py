"""Exception types shared across the package."""


class DlczSimError(Exception):
    """Base class for all package errors."""


class ParameterError(DlczSimError, ValueError):
    """A parameter is outside its physical or mathematical domain."""


class ContractError(DlczSimError, ValueError):
    """An operation was called in a state its contract forbids."""


class EstimatorError(DlczSimError, ZeroDivisionError):
    """An estimator is undefined for the given counts (zero denominator)."""


class StalledChainError(DlczSimError, RuntimeError):
    """A repeater chain cannot make progress (some success probability is zero).

    ``level`` is 0 for elementary-link generation and i for the i-th swap level.
    """

    def __init__(self, level: int, message: str | None = None):
        self.level = level
        super().__init__(message or f"chain stalled: success probability is 0 at level {level}")


class NoHeraldsError(DlczSimError, RuntimeError):
    """A sampling run collected zero heralded trials."""


class RankDeficiencyError(DlczSimError, ValueError):
    """The fit design matrix is rank deficient (degenerate data)."""


class IllConditionedError(DlczSimError, ValueError):
    """The fit is ill conditioned (e.g. insufficient phase coverage)."""


class ConfigError(DlczSimError, ValueError):
    """A configuration file failed to parse or is missing required fields."""
