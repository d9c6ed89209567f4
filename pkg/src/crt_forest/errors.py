"""Exception types shared across the package."""


class CrtForestError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CrtForestError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class MalformedPath(CrtForestError, ValueError):
    """An excursion does not satisfy the Dyck-path invariants."""


class MalformedNewick(CrtForestError, ValueError):
    """A Newick string cannot be parsed under the supported grammar."""


class UnknownVertex(CrtForestError, KeyError):
    """A vertex id is not present in the tree."""


class EmptySelection(CrtForestError, ValueError):
    """A leaf selection must contain at least one leaf."""


class TooManyLeavesRequested(CrtForestError, ValueError):
    """More leaves requested than the tree contains."""


class NotTiltable(CrtForestError, ValueError):
    """No admissible tilting constant exists for the offspring family."""


class InfeasibleSize(CrtForestError, ValueError):
    """The offspring support makes a degree sequence of this size impossible."""


class RejectionBudgetExceeded(CrtForestError, RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class NotStrictBinary(CrtForestError, ValueError):
    """The operation requires a strict binary tree (k leaves, 2k-1 edges)."""


class DegenerateSample(CrtForestError, ValueError):
    """A variance estimate or test statistic is undefined for this sample."""


class InsufficientData(CrtForestError, ValueError):
    """Clustering requires at least two observations."""
