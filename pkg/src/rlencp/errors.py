"""Exception hierarchy.

Every error raised deliberately by the library derives from ``RlenError`` and
carries an ``exit_code`` used by the command line front end.
"""


class RlenError(Exception):
    exit_code = 1


class ArgumentError(RlenError, ValueError):
    """Invalid argument or configuration value."""

    exit_code = 2


class DomainError(RlenError, ValueError):
    """Input data outside the domain an operation is defined on."""

    exit_code = 3


class ParseError(DomainError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegeneracyError(RlenError, ArithmeticError):
    """A numerical quantity collapsed (zero denominator, empty sum, ...)."""

    exit_code = 4

    def __init__(self, message, **diagnostics):
        if diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)
        self.diagnostics = diagnostics


class EstimationDegenerateError(DegeneracyError):
    pass


class IsolatedPointError(DegeneracyError):
    pass


class SelectionError(DegeneracyError):
    pass


class DegenerateFitError(DegeneracyError):
    pass


class ConditioningError(DegeneracyError):
    pass


class StageError(RlenError):
    """Wraps a failure inside one pipeline stage, keeping the original exit code."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
