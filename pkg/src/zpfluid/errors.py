"""Exception hierarchy shared by every module."""


class ZPFError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ZPFError, ValueError):
    """An input violates a type invariant or operation precondition."""


class UnsupportedModeError(ZPFError):
    """The operation needs full sampling profiles but only a constant I is available."""


class RegimeError(ValidationError):
    """Asymptotic formula evaluated outside the regime where it means anything."""


class ConfigError(ValidationError):
    """Configuration file or CLI flag problem, with a field-qualified message."""


class NumericalError(ZPFError):
    """Quadrature or Monte Carlo failure. ``result`` carries the best estimate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
