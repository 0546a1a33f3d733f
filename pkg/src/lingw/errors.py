"""Exception hierarchy shared by all modules."""


class LinGWError(Exception):
    """Base class for all package errors."""


class ParseError(LinGWError):
    pass


class ValidationError(LinGWError):
    pass


class LinGWIOError(LinGWError):
    pass


class MarginalError(ValidationError):
    """A plan violates its marginal constraints.

    ``violation`` carries the largest absolute deviation found.
    """

    def __init__(self, message, violation=float("nan")):
        super().__init__(message)
        self.violation = violation


class InfeasibleError(ValidationError):
    pass


class ZeroRowError(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class RefMismatch(ValidationError):
    pass


class NoPointsError(ValidationError):
    pass


class TooFewPixels(ValidationError):
    pass


class NonTriangleFace(ParseError):
    pass


class DisconnectedMesh(ValidationError):
    pass


class ClassTooSmall(ValidationError):
    pass


class IdMismatch(ValidationError):
    pass


class DegenerateVariance(ValidationError):
    pass
