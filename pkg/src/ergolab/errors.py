"""Exception types shared across the package."""


class ErgolabError(Exception):
    """Base class for all package errors."""


class UsageError(ErgolabError):
    """A caller violated an operation contract (domain mismatch, bad argument)."""


class NumericalError(ErgolabError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BudgetError(ErgolabError):
    """A search or cover exhausted its combinatorial budget (inconclusive, not a disproof)."""

    def __init__(self, message: str, **info):
        super().__init__(message)
        self.info = dict(info)


class ConfigParseError(ErgolabError):
    """Scenario config could not be parsed or has structural problems (CLI exit 2)."""


class ConfigInvariantError(ErgolabError):
    """Scenario config parsed but violates a model invariant (CLI exit 3)."""
