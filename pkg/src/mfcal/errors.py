"""Exception types shared across the toolkit.

Everything derives from CalibrationError so callers can catch toolkit
failures with a single except clause; the ValueError/RuntimeError mixins
keep the exceptions idiomatic for code that does not know about mfcal.
"""


class CalibrationError(Exception):
    """Base class for all mfcal errors."""


class ShapeError(CalibrationError, ValueError):
    """Array or layer dimensions do not chain or do not match."""


class DomainError(CalibrationError, ValueError):
    """An input value is outside the function's domain (e.g. non-finite)."""


class DegenerateMaskError(CalibrationError, ValueError):
    """An output mask with no observed entries was used in a loss."""


class DegenerateVarianceError(CalibrationError, ValueError):
    """Explained variance is undefined because the target variance is zero."""


class NumericOverflowError(CalibrationError, ArithmeticError):
    """A forward or backward pass produced a non-finite intermediate."""


class TrainingDivergedError(CalibrationError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training loss became non-finite at epoch {epoch}")


class CascadeError(CalibrationError, RuntimeError):
    """A cascade member failed; carries the member and stage that failed."""

    def __init__(self, member: int, stage: str, cause: Exception):
        self.member = member
        self.stage = stage
        self.cause = cause
        super().__init__(f"member {member} failed at stage {stage!r}: {cause}")


class DatasetFormatError(CalibrationError, ValueError):
    """A dataset file could not be parsed; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigError(CalibrationError, ValueError):
    """A run configuration is invalid."""
