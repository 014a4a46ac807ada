"""Exception hierarchy shared by all modules."""


class GaussMinkError(Exception):
    """Base class for all package-specific errors."""


class InvalidGridError(GaussMinkError):
    """Grid construction parameters are out of range."""


class FieldMismatchError(GaussMinkError):
    """A sampled field does not match the grid it claims to live on."""


class InvalidBodyError(GaussMinkError):
    """Support data does not describe a valid (positive, uniformly convex) body."""


class DegenerateBodyError(GaussMinkError):
    """A constructed polytope has empty interior."""


class RejectedInputError(GaussMinkError):
    """Input violates a hypothesis required by the requested computation."""


class ConvexityLossError(GaussMinkError):
    """The evolving body left the uniformly convex regime.

    Carries the offending node index and the flow time at which step retries
    were exhausted.
    """

    def __init__(self, message, node=None, time=None):
        super().__init__(message)
        self.node = node
        self.time = time


class SolverFailureError(GaussMinkError):
    """The constrained optimizer could not finish; carries diagnostic info."""

    def __init__(self, message, dropped_facet=None):
        super().__init__(message)
        self.dropped_facet = dropped_facet
