"""Exception hierarchy shared by every module."""


class CurvCertError(Exception):
    """Base class for all library errors."""


class CapabilityError(CurvCertError):
    """A requested jet order exceeds what a field or operation supports."""


class DomainError(CurvCertError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class GeometryError(CurvCertError):
    """A metric failed a geometric precondition (e.g. positive definiteness)."""


class PreconditionError(CurvCertError, ValueError):
    """A documented precondition of an operation does not hold."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class UsageError(CurvCertError, ValueError):
    """A caller asked for something that does not exist (unknown name, bad config)."""
