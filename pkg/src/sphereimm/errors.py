"""Exception hierarchy."""


class SphereImmError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SphereImmError, ValueError):
    """Inputs have inconsistent dimensions."""


class ZeroOnSphereError(SphereImmError):
    """The map vanishes (numerically) on the sphere where a degree is requested."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class QuadratureError(SphereImmError):
    """The degree integral did not land close enough to an integer."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ClusterAmbiguityError(SphereImmError):
    """Two numerically coincident roots carry opposite orientation signs."""


class NoStabilizationError(SphereImmError):
    """A radius / parameter schedule ran out without two agreeing steps."""

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence


class ParseError(SphereImmError, ValueError):
    """Malformed map document; ``location`` names the offending line or field."""

    def __init__(self, message, location=None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
