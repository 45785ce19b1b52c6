"""Exception hierarchy.

Two families map onto the CLI exit codes: ``InputError`` (exit 1) for bad
configuration, data or arguments, and ``NumericalError`` (exit 2) for
failures inside a computation.
"""


class WallDiffError(Exception):
    """Base class for every error raised by the package."""


class InputError(WallDiffError, ValueError):
    pass


class ScalingError(InputError):
    pass


class LayoutError(InputError):
    pass


class DomainError(InputError):
    pass


class OrderError(InputError):
    pass


class AlignmentError(InputError):
    pass


class SchemaError(InputError):
    pass


class VersionError(InputError):
    pass


class StabilityError(InputError):
    """Explicit step violates the stability bound; carries a usable step."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NumericalError(WallDiffError, ArithmeticError):
    pass


class IntegrationError(NumericalError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class LearningError(NumericalError):
    pass


class IdentifiabilityError(NumericalError):
    pass
