"""Error hierarchy.

Every domain failure is a ``ValueError`` subclass carrying a readable message. The command
line maps them to exit codes through ``exit_code``.
"""


class GzSpecError(ValueError):
    exit_code = 1


class SpecParseError(GzSpecError):
    exit_code = 2


class UnsupportedSpectralShapeError(GzSpecError):
    exit_code = 3


class NotSemiFredholmError(GzSpecError):
    exit_code = 3


class InvalidSpectralSetError(GzSpecError):
    exit_code = 4


class MalformedSelectionError(InvalidSpectralSetError):
    pass


class AdmissibilityError(InvalidSpectralSetError):
    """The scalar r in (T + rP)^-1 (I - P) is too small."""


class ResidualExceededError(GzSpecError):
    exit_code = 5


class DepthOverflowError(GzSpecError):
    pass


class ShapeMismatchError(GzSpecError):
    pass


class UndefinedGammaError(GzSpecError):
    pass


class DegenerateRestrictionError(GzSpecError):
    pass


class InvalidProjectionError(GzSpecError):
    pass


class ContourTooCloseError(GzSpecError):
    pass


class NoConvergenceError(GzSpecError):
    pass


class NoSeparatingContourError(GzSpecError):
    pass


class ConditioningError(GzSpecError):
    pass


class InternalInvariantError(GzSpecError):
    pass
