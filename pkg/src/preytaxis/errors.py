"""Exception hierarchy.

Each class carries an ``exit_code`` used by the command-line front end.
"""


class PreytaxisError(Exception):
    exit_code = 5


class InvalidArgument(PreytaxisError, ValueError):
    exit_code = 4


class CoefficientSignError(InvalidArgument):
    pass


class ConvergenceError(PreytaxisError):
    """An iterative solver failed to reach its tolerance.

    ``last`` holds the final iterate (solver specific) and ``history`` the
    residual norms, so callers can inspect what went wrong.
    """

    exit_code = 3

    def __init__(self, message, last=None, history=None):
        super().__init__(message)
        self.last = last
        self.history = list(history) if history is not None else []


class SignChangingRoot(ConvergenceError):
    """Newton converged, but to a root with negative nodal values."""


class BifurcationStartError(ConvergenceError):
    pass


class DivergenceError(ConvergenceError):
    pass


class StateMissing(PreytaxisError):
    exit_code = 4


class NotApplicable(PreytaxisError):
    exit_code = 4


class UnstableStep(PreytaxisError):
    exit_code = 3


class PositivityError(PreytaxisError):
    exit_code = 5


class InvariantBreach(PreytaxisError):
    exit_code = 5


class ConfigError(PreytaxisError):
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
