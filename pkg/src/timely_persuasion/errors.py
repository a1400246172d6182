"""Exception hierarchy.

Validation problems (bad rates, bad configs) derive from ``ValidationError``
and map to CLI exit code 2; numerical failures map to exit code 3.
"""


class PersuasionError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PersuasionError, ValueError):
    """Inputs violate a documented precondition."""


class InvalidInstance(ValidationError):
    """Source rates or receiver weight violate the model assumptions."""


class DegenerateRates(ValidationError):
    """Both sampling rates are zero where the joint chain needs sampling."""


class NonPositiveTheta(ValidationError):
    pass


class InfeasibleResidual(ValidationError):
    pass


class NonPositiveHorizon(ValidationError):
    pass


class TooLarge(ValidationError):
    """An enumeration would exceed its configured cap."""


class InvalidProfile(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NumericalError(PersuasionError, RuntimeError):
    """An iterative routine failed to converge."""
