"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, breakdown 3,
no-profile 4); everything else is an ordinary failure.
"""


class KslabError(Exception):
    """Base class for all package errors."""


class ConfigError(KslabError):
    """Invalid configuration, parameters, or preconditions."""


class DomainError(KslabError):
    """Field data outside the admissible domain (negative density, non-finite values, ...)."""


class NumericalBreakdown(KslabError):
    """The time integration produced non-finite values."""


class NoProfileFound(KslabError):
    """Self-similar profile search exhausted its brackets."""

    def __init__(self, message, scan_log=None):
        super().__init__(message)
        self.scan_log = scan_log or []


class RegimeError(KslabError):
    """A diagnostic was requested outside the regime where it is defined."""
