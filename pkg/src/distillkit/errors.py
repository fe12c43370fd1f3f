"""Exception and warning types shared across distillkit."""

from pathlib import Path


class DistillKitError(Exception):
    """Base class for errors raised by distillkit."""


class ShapeMismatchError(DistillKitError, ValueError):
    """Two operands (or a config and a tensor) disagree on shape."""


class IncompatiblePlanError(DistillKitError, ValueError):
    """A distillation plan does not fit the student/teacher pair."""


class NonFiniteError(DistillKitError, FloatingPointError):
    """A NaN or Inf appeared where a finite value is required."""


class DataFormatError(DistillKitError, ValueError):
    """A data file is malformed. Carries the location of the problem."""

    def __init__(self, path: str | Path, line: int | None, message: str) -> None:
        self.path = str(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: {message}")


class EmptyMaskWarning(UserWarning):
    """An MLM-gated loss saw no masked tokens and returned 0."""
