"""Exception hierarchy shared by all modules."""


class HodgePrecError(Exception):
    """Base class for every error raised by this package."""


class ComplexError(HodgePrecError, ValueError):
    pass


class MissingFace(ComplexError):
    """A triangle references an edge that is not in the complex."""


class NonPositiveWeight(ComplexError):
    pass


class IndexOutOfRange(ComplexError):
    pass


class DuplicateSimplex(ComplexError):
    pass


class NotFree(HodgePrecError, ValueError):
    """Collapse requested at an edge with zero or several incident triangles."""


class UnknownEdge(HodgePrecError, KeyError):
    pass


class DimensionMismatch(HodgePrecError, ValueError):
    pass


class NonFiniteEncountered(HodgePrecError, FloatingPointError):
    pass


class NontrivialHomology(HodgePrecError):
    """The shifted ichol baseline needs beta_0 = 1 and beta_1 = 0."""


class FactorizationBreakdown(HodgePrecError):
    pass


class DenseCapExceeded(HodgePrecError):
    pass


class ZeroPivot(HodgePrecError, ZeroDivisionError):
    pass


class NoIncidentTriangle(HodgePrecError):
    pass


class KernelClash(HodgePrecError):
    """The triangle subsample drops part of im B2^T (ker Pi meets im B2^T)."""


class DegenerateInput(HodgePrecError, ValueError):
    pass


class TargetUnreachable(HodgePrecError, ValueError):
    pass
