"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class DetoxError(Exception):
    exit_code = 1


class DataError(DetoxError, ValueError):
    """Malformed input data or invalid configuration."""

    exit_code = 3


class AlignmentError(DetoxError, ValueError):
    exit_code = 4


class NumericError(DetoxError, ArithmeticError):
    """Training diverged or a computation produced a non-finite value."""

    exit_code = 5
