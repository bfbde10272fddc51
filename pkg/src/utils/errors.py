"""
Solver error types
"""


class SolverError(Exception):
    """Base class for every error raised by the solver"""


class ConfigurationError(SolverError):
    """Invalid parameters or configuration text"""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(SolverError, ValueError):
    """Argument outside the domain of an operation"""


class ProblemError(SolverError):
    """Problem definition cannot be evaluated"""


class UnsupportedProblemError(SolverError):
    """Oracle asked for a problem it cannot solve"""


class RunError(SolverError):
    """A Monte Carlo run produced no usable samples"""


class PoisonedSampleError(SolverError):
    """Overflow or depth cap inside one sample; the sample is discarded and counted by reason"""

    def __init__(self, reason, detail=""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
