"""Exception hierarchy shared by all modules."""


class LiebscherError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(LiebscherError, ValueError):
    pass


class DegenerateExponent(InvalidParameter):
    """A stick-breaking tail vanished before the last component."""


class ConstraintViolation(InvalidParameter):
    pass


class UnsupportedBase(LiebscherError):
    pass


class TransformError(LiebscherError):
    """Raised when a custom transform cannot be inverted on [0, 1]."""


class InvalidNoise(InvalidParameter):
    pass


class ShapeMismatch(LiebscherError, ValueError):
    pass


class DimensionError(LiebscherError, ValueError):
    pass


class DegenerateSample(LiebscherError, ValueError):
    pass


class PriorUnsupported(LiebscherError):
    pass


class DegenerateObserved(LiebscherError, ValueError):
    pass


class DomainError(LiebscherError, ValueError):
    pass


class NonConvergence(LiebscherError):
    pass
