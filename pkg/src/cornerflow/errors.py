"""Exception hierarchy shared across modules."""


class CornerflowError(Exception):
    """Base class for all package errors."""


class DomainError(CornerflowError, ValueError):
    """A point or parameter lies outside the admissible set."""


class SingularConfigurationError(CornerflowError, ArithmeticError):
    """An image point coincides (numerically) with the evaluation point."""


class NonConvergenceError(CornerflowError, RuntimeError):
    """A shell sum did not meet its stopping tolerance before the hard cap."""


class SeparationError(CornerflowError, ValueError):
    """Points are too close for the eigenfunction oracle to be reliable."""


class QuadratureError(CornerflowError, RuntimeError):
    """Adaptive panel refinement hit its depth limit."""


class TransportError(CornerflowError, RuntimeError):
    """Particle transport became unstable or was misconfigured."""
