"""Exception hierarchy shared by every module of the package."""


class NsfacError(Exception):
    """Base class for all errors raised by nsfac."""

    exit_code = 1


class DomainError(NsfacError, ValueError):
    """A constitutive function was evaluated outside its domain."""

    exit_code = 2


class UsageError(NsfacError, ValueError):
    """Arguments are malformed (shape mismatch, empty sample grid, ...)."""

    exit_code = 2


class ConfigError(UsageError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StateCorruptionError(NsfacError, RuntimeError):
    """The discrete state left the admissible set during time stepping.

    Carries the offending cell index ``(j, i)`` (row, column) and the
    Runge-Kutta stage so the failure can be located in a snapshot.
    """

    exit_code = 3

    def __init__(self, message, cell=None, stage=None):
        self.message = message
        self.cell = cell
        self.stage = stage
        parts = [message]
        if cell is not None:
            parts.append(f"cell={tuple(int(c) for c in cell)}")
        if stage is not None:
            parts.append(f"stage={stage}")
        super().__init__(" ".join(parts))


class FormatError(NsfacError):
    """A snapshot or output file is malformed or cannot be written."""

    exit_code = 4
