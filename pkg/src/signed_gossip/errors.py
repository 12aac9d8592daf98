"""Exception types shared across the package.

The CLI maps these onto exit codes: input errors -> 2, precondition
violations -> 3, numerical non-convergence -> 4.
"""


class GraphFormatError(ValueError):
    """Malformed graph, schedule or matrix input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PreconditionError(ValueError):
    """An analysis was asked for on input that does not satisfy its assumptions."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""
