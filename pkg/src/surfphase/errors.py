"""Exception hierarchy shared by all modules."""


class SurfPhaseError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(SurfPhaseError, ValueError):
    """An argument is outside its documented domain."""


class ResourceError(SurfPhaseError):
    """A request would exceed a hard size limit."""


class MeshValidationError(SurfPhaseError, ValueError):
    """A mesh violates a manifold, orientation or triangle-inequality invariant."""


class EmbeddabilityError(SurfPhaseError, ValueError):
    """A profile cannot be realised as an embedded surface of revolution."""


class AssemblyError(SurfPhaseError):
    """Operator assembly produced non-finite entries."""

    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class OverflowFieldError(SurfPhaseError, ArithmeticError):
    """An energy evaluation is not finite."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class NumericalError(SurfPhaseError):
    """A linear solve failed."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NonConvergenceError(SurfPhaseError):
    """An iteration stopped before reaching its tolerance."""

    def __init__(self, message, residual_trace=()):
        super().__init__(message)
        self.residual_trace = list(residual_trace)


class AccuracyError(SurfPhaseError):
    """A computed quantity failed its accuracy contract."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class DegenerateInputError(SurfPhaseError, ValueError):
    """The input makes the requested quantity trivially zero."""


class ResolutionError(SurfPhaseError, ValueError):
    """epsilon is too small for the mesh to resolve the interface."""


class TheoremViolationError(SurfPhaseError):
    """An experiment found a state its governing theorem rules out."""
