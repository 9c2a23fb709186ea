"""
Exception hierarchy shared by the library and the CLI.

Each leaf maps onto one CLI exit code (see EXIT_CODES).
"""


class HypercorrError(Exception):
    """Base class for every error raised by the lab."""


class ParameterError(HypercorrError, ValueError):
    """Invalid inputs: shape mismatch, m > n, too few trials, unknown names."""


class DomainError(ParameterError):
    """Argument outside the mathematical domain of a formula."""


class CapExceededError(ParameterError):
    """Exact enumeration refused because n is above the configured cap."""


class ConvergenceError(HypercorrError, ArithmeticError):
    """A series that was required to converge did not."""


class DegenerateRunError(HypercorrError):
    """A harness run in which every grid point was skipped as infeasible."""


class ArtifactIOError(HypercorrError, OSError):
    """A file could not be read or written; the message names the path."""


EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def exit_code_for(exc):
    """Map an exception onto the CLI exit code contract."""
    if isinstance(exc, DegenerateRunError):
        return EXIT_DEGENERATE
    if isinstance(exc, (ArtifactIOError, OSError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        # pydantic.ValidationError is a ValueError too
        return EXIT_PARAMETER
    return 1
