"""Exception hierarchy.

Two families are distinguished because the command line maps them to
different exit codes: input/usage problems (exit 2) and numerical failures
(exit 1).
"""


class SuperdarkError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(SuperdarkError, ValueError):
    """Malformed or inconsistent input (non-finite entries, shape mismatch...)."""

    exit_code = 2


class UsageError(InputError):
    """An operation was called with a mode it does not support."""


class GeometryError(InputError):
    """Invalid atom arrangement: coincident atoms, too few atoms, not collinear."""


class SingularSystemError(SuperdarkError, ValueError):
    """A linear system has no unique solution (e.g. duplicate nodes)."""


class EvaluationError(SuperdarkError, ArithmeticError):
    """An objective function returned a non-finite value."""


class AccuracyError(SuperdarkError):
    """A quadrature rule is too coarse for the requested geometry."""


class DegenerateTargetError(SuperdarkError, ValueError):
    """Frequency tuning is undefined because a target amplitude vanishes."""


class BracketError(SuperdarkError):
    """A minimum was found at the edge of the search interval."""


class ConvergenceError(SuperdarkError):
    """Iterative refinement did not converge.

    ``best`` carries the best point found so far, if any.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
