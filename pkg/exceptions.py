class DelaySimError(Exception):
    """Base class for every error raised by this project."""

class DomainError(DelaySimError, ValueError):
    """Raised when an argument lies outside the domain where an operation is defined.

    The reason is given as the exception message.
    """

class DimensionError(DelaySimError, ValueError):
    """Raised when vector or matrix shapes do not match."""

class ConfigError(DelaySimError, ValueError):
    """Raised when a scenario file or scenario dict is malformed."""

class HistoryUnderflow(DelaySimError):
    """Raised when stored histories are too short for the requested read."""

class BlowUp(DelaySimError):
    """Raised when the integrated state stops being finite."""

    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"non-finite state at t = {t!r}")
        self.t = t

class InvariantViolation(DelaySimError):
    """Raised when a runtime assertion fails at error level."""

class QuitWithError(SystemExit):
    """Can be raised to exit the command line tool with a nonzero status."""
