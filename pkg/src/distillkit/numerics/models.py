"""Data models for the numerics module."""

from enum import Enum

from pydantic import BaseModel, Field


class Precision(str, Enum):
    """Floating point width used for parameters and activations."""

    FLOAT32 = "float32"  # training
    FLOAT64 = "float64"  # verification, gradient checks


class GradCheckReport(BaseModel):
    """Result of comparing reverse-mode gradients with central differences."""

    max_rel_error: float = Field(..., ge=0.0, description="Largest relative error seen")
    mean_rel_error: float = Field(..., ge=0.0, description="Mean relative error over checked coordinates")
    num_checked: int = Field(..., ge=0, description="Number of coordinates compared")
    eps: float = Field(..., gt=0.0, description="Finite-difference step")
    worst_param: str | None = Field(None, description="Parameter holding the worst coordinate")
    worst_index: tuple[int, ...] | None = Field(None, description="Index of the worst coordinate")

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_rel_error < tolerance
