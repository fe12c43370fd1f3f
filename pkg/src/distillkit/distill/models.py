"""Data models for the distillation module."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator

from distillkit.encoder.models import EncoderConfig
from distillkit.encoder.params import truncated_normal
from distillkit.numerics import Tensor


class DistillSuite(str, Enum):
    """Loss family of a distillation run."""

    DISTIL_TRIPLE = "distil_triple"  # MLM + soft MLM + final-layer cosine alignment
    TINY_LAYERWISE = "tiny_layerwise"  # embedding + per-layer MSE + soft output CE
    COMPACT_HYBRID = "compact_hybrid"  # MLM + soft MLM + per-layer cosine/attention KL
    MOBILE_LAYERWISE = "mobile_layerwise"  # MLM + same-index layer MSE/attention KL


# Loss weights used when a plan does not set its own.
DEFAULT_ALPHAS: dict[DistillSuite, tuple[float, float, float]] = {
    DistillSuite.DISTIL_TRIPLE: (2.0, 5.0, 1.0),
    DistillSuite.COMPACT_HYBRID: (1.0, 5.0, 3.0),
}
DEFAULT_MOBILE_ALPHA = 0.5


@dataclass(frozen=True)
class LayerMap:
    """Student-to-teacher layer index map ``g`` over ``0..M+1``.

    Index 0 is the embedding layer and ``M+1`` the output layer on both
    sides. ``targets[l]`` is ``g(l)``.
    """

    student_layers: int
    teacher_layers: int
    targets: tuple[int, ...]

    def __post_init__(self) -> None:
        m, n = self.student_layers, self.teacher_layers
        if len(self.targets) != m + 2:
            raise ValueError(f"layer map needs {m + 2} entries, got {len(self.targets)}")
        if self.targets[0] != 0 or self.targets[-1] != n + 1:
            raise ValueError(f"layer map must send 0 -> 0 and {m + 1} -> {n + 1}, got {self.targets}")
        if any(b <= a for a, b in zip(self.targets, self.targets[1:], strict=False)):
            raise ValueError(f"layer map must be strictly increasing, got {self.targets}")
        if any(not 1 <= t <= n for t in self.targets[1:-1]):
            raise ValueError(f"interior layers must map into 1..{n}, got {self.targets}")

    def __call__(self, layer: int) -> int:
        if not 0 <= layer <= self.student_layers + 1:
            raise IndexError(f"student layer {layer} outside 0..{self.student_layers + 1}")
        return self.targets[layer]

    @classmethod
    def from_interior(cls, interior: Sequence[int], teacher_layers: int) -> LayerMap:
        """Build a map from the teacher layers of student layers 1..M."""
        return cls(
            student_layers=len(interior),
            teacher_layers=teacher_layers,
            targets=(0, *(int(t) for t in interior), teacher_layers + 1),
        )


class DistillPlan(BaseModel):
    """Which losses a distillation run optimises and with what weights."""

    model_config = {"extra": "forbid"}

    suite: DistillSuite = Field(DistillSuite.DISTIL_TRIPLE, description="Loss family")
    alphas: tuple[float, float, float] | None = Field(
        None, description="(mlm, soft mlm, third term) weights; suite default when unset"
    )
    alpha: float = Field(
        DEFAULT_MOBILE_ALPHA, gt=0.0, lt=1.0, description="MLM share of the mobile_layerwise loss"
    )
    lambdas: list[float] | None = Field(
        None, description="Weights for embedding, layers 1..M and output (tiny_layerwise); all 1.0 when unset"
    )
    layer_map: list[int] | None = Field(
        None, description="Teacher layer for each student layer 1..M; uniform stride when unset"
    )
    temperature: float = Field(1.0, gt=0.0, description="Softmax temperature of the soft MLM term")
    sum_masked: bool = Field(False, description="Sum MLM terms over masked tokens instead of averaging")
    swap_attention_kl: bool = Field(
        False, description="Use KL(teacher || student) for attention maps instead of KL(student || teacher)"
    )

    @field_validator("alphas")
    @classmethod
    def _non_negative_alphas(cls, value: tuple[float, float, float] | None) -> Any:
        if value is not None and any(a < 0 for a in value):
            raise ValueError(f"alphas must be non-negative, got {value}")
        return value

    @field_validator("lambdas")
    @classmethod
    def _non_negative_lambdas(cls, value: list[float] | None) -> Any:
        if value is not None and any(w < 0 for w in value):
            raise ValueError(f"lambdas must be non-negative, got {value}")
        return value

    def resolved_alphas(self) -> tuple[float, float, float]:
        if self.alphas is not None:
            return self.alphas
        return DEFAULT_ALPHAS.get(self.suite, (1.0, 1.0, 1.0))

    def resolved_lambdas(self, student_layers: int) -> list[float]:
        if self.lambdas is None:
            return [1.0] * (student_layers + 2)
        return list(self.lambdas)


@dataclass
class DistillProjections:
    """Temporary learnable projections for a student narrower than its teacher.

    ``w_h`` maps student hidden states ``[.., D_s]`` to ``D_t``; ``w_e`` does
    the same for the embedding layer output. Both are discarded once
    distillation ends.
    """

    w_h: Tensor | None = None
    w_e: Tensor | None = None

    @classmethod
    def for_pair(
        cls, student: EncoderConfig, teacher: EncoderConfig, seed: int = 0, dtype: Any = np.float64
    ) -> DistillProjections:
        if student.hidden_dim == teacher.hidden_dim:
            return cls()
        rng = np.random.default_rng(seed)
        shape = (student.hidden_dim, teacher.hidden_dim)
        return cls(
            w_h=Tensor(truncated_normal(rng, shape, student.init_std, dtype), requires_grad=True, name="proj.w_h"),
            w_e=Tensor(truncated_normal(rng, shape, student.init_std, dtype), requires_grad=True, name="proj.w_e"),
        )

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [(t.name or "", t) for t in (self.w_h, self.w_e) if t is not None]


@dataclass
class LossBreakdown:
    """Total loss plus every weighted-in component as a float."""

    total: Tensor
    components: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {"loss": self.total.item(), **self.components}
