"""Exception hierarchy shared by all compute modules."""


class FractalSpectraError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FractalSpectraError, ValueError):
    """A model parameter or level is outside its admissible range."""


class PreconditionError(FractalSpectraError, ValueError):
    """An operation was called on input that violates its precondition."""


class DomainError(FractalSpectraError, ValueError):
    """A closed-form map was evaluated outside its real domain."""


class ExtensionError(FractalSpectraError):
    """Eigenfunction extension requested at (or near) a forbidden eigenvalue."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class SingularityError(FractalSpectraError):
    """A rational map was evaluated at a pole."""


class ResourceError(FractalSpectraError):
    """Requested problem size exceeds the configured memory/dimension budget."""


class NumericalError(FractalSpectraError):
    """A numerical routine failed to converge or produced an inaccurate result."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(FractalSpectraError):
    """An internal bookkeeping identity failed (counts, oracle agreement, ...)."""
