"""Exception hierarchy for the toolkit.

Every error is a ``RuntimeError`` so callers that only know the generic
failure mode keep working; the subclasses name the specific failure.
"""


class HlspError(RuntimeError):
    """Base class of all toolkit errors."""


class DimensionMismatchError(HlspError):
    pass


class NonFiniteEntryError(HlspError):
    pass


class EmptyHierarchyError(HlspError):
    pass


class InvalidParameterError(HlspError):
    pass


class ProblemParseError(HlspError):
    pass


class ProblemIOError(HlspError):
    pass


class NotPositiveDefiniteError(HlspError):
    pass


class SchurNotInvertibleError(HlspError):
    pass


class AllCoefficientsZeroError(HlspError):
    pass


class ProjectionError(HlspError):
    """No feasible root was found while projecting onto the duality set."""


class MaxItersExceededError(HlspError):
    pass


class SingularKktError(HlspError):
    pass


class PointNotConvergedError(HlspError):
    pass


class SingularSystemError(HlspError):
    pass


class UsageError(HlspError):
    pass
