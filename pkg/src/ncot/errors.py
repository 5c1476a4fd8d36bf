"""Exception types shared across the package."""


class NcotError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(NcotError, ValueError):
    """Operands have incompatible matrix dimensions or tuple lengths."""


class DomainError(NcotError, ValueError):
    """A scalar function was evaluated outside its domain (names the offending point)."""


class SingularityError(NcotError, ValueError):
    """An operation required strictly positive spectrum but found an eigenvalue at or below threshold."""


class EigensolverError(NcotError, RuntimeError):
    """The Hermitian eigensolver failed to converge."""


class InvalidPathError(NcotError, ValueError):
    """A transport path violates the discrete continuity equation beyond tolerance."""


class DegeneratePairError(NcotError, ValueError):
    """A density pair is too close (or the squared distance too small) for the requested operation."""


class UsageError(NcotError, ValueError):
    """An operation was called in a state its contract forbids (e.g. on an infeasible result)."""


class ParseError(NcotError, ValueError):
    """A problem file is malformed; the message carries field or line context."""
