"""Exception types shared across the toolkit.

Plain ValueError is raised for malformed arguments (wrong shapes, bad
dimensions, unsupported options).  The classes below mark failure modes a
caller may want to handle separately from usage bugs.
"""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance.

    Carries the residual history so callers can report partial progress.
    """

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class CapacityError(RuntimeError):
    """A problem exceeds a configured size limit for a dense algorithm."""


class DegeneracyError(RuntimeError):
    """A quantity required to be bounded away from zero (numerically) vanished."""


class PreconditionError(ValueError):
    """Input data violates a documented hard precondition."""


class SchemaError(ValueError):
    """A scenario file failed to parse or validate."""
