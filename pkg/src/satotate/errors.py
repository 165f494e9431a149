"""Exception types shared across the package."""


class SatotateError(Exception):
    """Base class for package errors."""


class ResourceLimitError(SatotateError):
    """A requested computation exceeds the configured memory or scan budget."""


class HypothesisViolationError(SatotateError):
    """An operation was invoked outside the hypotheses its bound requires."""


class QuadratureError(SatotateError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class CoefficientBoundError(SatotateError):
    """A constructed expansion violates a certified coefficient inequality."""


class CacheFormatError(SatotateError):
    """A coefficient cache or import file is malformed or fails validation."""
