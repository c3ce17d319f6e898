"""Exception types shared across the package."""


class SumlabError(Exception):
    """Base class for all sumlab errors."""


class DomainError(SumlabError, ValueError):
    """An input violates a function's mathematical domain."""


class NoEquilibriumError(SumlabError, RuntimeError):
    """The closed-city equilibrium could not be bracketed."""


class QuadratureError(SumlabError, RuntimeError):
    """Numerical integration failed to converge; message carries diagnostics."""


class SingularDesignError(SumlabError, ValueError):
    """A regressor matrix is rank deficient; message names the offending column."""


class WeakInstrumentError(SumlabError, ValueError):
    """The instrument is (numerically) uncorrelated with the endogenous regressor."""


class InsufficientDataError(SumlabError, ValueError):
    """Too few valid observations for the requested fit.

    ``reason`` is a short machine-readable code used in skip reports.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ConfigError(SumlabError, ValueError):
    """Invalid run configuration; message lists every violated key."""


class SchemaError(SumlabError, ValueError):
    """A CSV file does not match its schema; message carries the line number."""
