"""Exception types shared across the package."""


class SeglexError(Exception):
    """Base class for every error this package raises on purpose."""


class FormatError(SeglexError):
    """A file does not conform to its declared format."""


class TruncationError(FormatError):
    """A binary payload is shorter than its header promises."""


class ValidationError(SeglexError):
    """Input data violates a documented invariant."""


class ShapeError(SeglexError):
    """Array dimensions do not match."""


class ParameterError(SeglexError):
    """A parameter value is outside its admissible range."""


class InsufficientDataError(SeglexError):
    """Not enough data to fit a model."""


class DegenerateFrameError(SeglexError):
    """A zero-norm frame makes the cosine distance undefined."""


class DegenerateSegmentError(SeglexError):
    """A segment's mean vector is zero and cannot be normalized."""


class UndefinedMetricError(SeglexError):
    """A metric has an empty denominator for these inputs."""
