"""Data models for the benchmark harness."""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator


class BenchConfig(BaseModel):
    """Grid and timing protocol of one benchmark run."""

    model_config = {"extra": "forbid"}

    batch_sizes: list[int] = Field(default_factory=lambda: [1, 8], description="Batch axis of the grid")
    seq_lens: list[int] = Field(default_factory=lambda: [32, 128, 512], description="Length axis of the grid")
    warmups: int = Field(5, ge=5, description="Untimed forward passes per grid point")
    repetitions: int = Field(30, ge=30, description="Timed forward passes per grid point")
    memory_budget_bytes: int = Field(4 << 30, gt=0, description="Grid points estimated above this are skipped")
    seed: int = Field(0, ge=0)

    @field_validator("batch_sizes", "seq_lens")
    @classmethod
    def _positive_axis(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("benchmark grid axes must not be empty")
        if any(v < 1 for v in value):
            raise ValueError(f"grid values must be positive, got {value}")
        return value


class BenchResult(BaseModel):
    """Latency and memory of one configuration at one grid point."""

    config: str
    batch: int
    seq_len: int
    params: int
    peak_bytes: int = Field(..., description="Analytic peak of parameter plus activation bytes")
    median_ms: float | None = None
    p90_ms: float | None = None
    repetitions: int = 0
    skipped: bool = False
    reason: str | None = None
