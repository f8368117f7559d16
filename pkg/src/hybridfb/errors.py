"""Exception hierarchy shared by every module of the package."""


class HybridFBError(Exception):
    """Base class for all errors raised by :mod:`hybridfb`."""


class ContractViolation(HybridFBError, ValueError):
    """An argument breaks a structural precondition (shape, symmetry...)."""


class InvalidInputError(HybridFBError, ValueError):
    """An argument carries non-finite or out-of-range values."""


class SingularMatrixError(HybridFBError, ArithmeticError):
    """A matrix expected to be Hermitian positive definite is singular."""


class UnsupportedConfigurationError(HybridFBError, ValueError):
    """The requested configuration lies outside the supported regime."""


class DegenerateCovarianceError(HybridFBError, ValueError):
    """A covariance carries no power, so no direction can be derived from it."""


class CapacityError(HybridFBError, ValueError):
    """A problem is too large for an exhaustive method."""


class ConfigError(HybridFBError, ValueError):
    """An experiment configuration file could not be parsed or validated."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key!r}: "
        super().__init__(prefix + message)
