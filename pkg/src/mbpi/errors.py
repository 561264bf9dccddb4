"""Exception hierarchy shared by all modules."""


class MBPIError(Exception):
    """Base class for every error raised by :mod:`mbpi`."""


class DomainError(MBPIError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class ArgumentError(MBPIError, ValueError):
    """Arguments are individually valid but inconsistent (e.g. ``c >= t``)."""


class RegimeError(MBPIError):
    """The process parameters do not satisfy the regime an operation needs."""


class ConstructionError(MBPIError):
    """An intensity table violates its invariants.

    Attributes
    ----------
    index : int or None
        Offending coefficient index, when one can be named.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalError(MBPIError):
    """An integrator or quadrature failed to reach the requested accuracy."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConfigError(MBPIError):
    """An experiment configuration is malformed or asks for an invalid pairing."""
