"""Data models for the training module."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from distillkit.corpus.models import IntArray, MaskingConfig
from distillkit.distill.models import DistillPlan
from distillkit.errors import NonFiniteError
from distillkit.numerics.models import Precision
from distillkit.tokenizer import Vocab


class RunMode(str, Enum):
    """What a run optimises."""

    DISTILL = "distill"
    PRETRAIN_MLM = "pretrain_mlm"
    FINETUNE_TOKEN = "finetune_token"
    FINETUNE_SEQ = "finetune_seq"


# Epochs used for fine-tuning when a run config leaves them unset.
DEFAULT_FINETUNE_EPOCHS = {RunMode.FINETUNE_TOKEN: 5, RunMode.FINETUNE_SEQ: 3}


class OptimizerConfig(BaseModel):
    """Decoupled-weight-decay Adam with linear warmup and linear decay."""

    model_config = {"extra": "forbid"}

    learning_rate: float = Field(5e-5, gt=0.0, description="Peak learning rate")
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.01, ge=0.0, description="Not applied to biases and layer-norm parameters")
    warmup_fraction: float = Field(0.06, ge=0.0, lt=1.0, description="Share of steps spent warming up")
    clip_norm: float | None = Field(1.0, gt=0.0, description="Global gradient norm cap; None disables")


class RunConfig(BaseModel):
    """One training run: distillation, MLM pretraining or fine-tuning."""

    model_config = {"extra": "forbid"}

    mode: RunMode = Field(RunMode.DISTILL, description="What the run optimises")
    steps: int = Field(1000, ge=0, description="Optimizer steps (distill, pretrain_mlm)")
    epochs: int | None = Field(None, ge=0, description="Passes over the data (fine-tuning)")
    batch_size: int = Field(16, ge=1)
    max_len: int = Field(64, ge=3, description="Encoded sequence length")
    seed: int = Field(0, ge=0)
    eval_every: int = Field(100, ge=1, description="Steps between report entries")
    precision: Precision = Field(Precision.FLOAT32, description="float64 for verification runs")
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    masking: MaskingConfig = Field(default_factory=MaskingConfig)
    plan: DistillPlan | None = Field(None, description="Distillation plan (distill mode)")
    teacher_checkpoint: str | None = Field(None, description="Teacher manifest path (distill mode)")
    init_checkpoint: str | None = Field(None, description="Starting weights (pretrain/fine-tune)")
    student_preset: str = Field("desk_student", description="Student architecture preset (distill mode)")
    student_overrides: dict[str, int | float | str | bool] = Field(
        default_factory=dict, description="EncoderConfig fields overriding the student preset"
    )
    prefetch: int = Field(2, ge=1, description="Batches prepared ahead of the training step")
    heldout_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    label_rule: str = Field("first", pattern="^(first|majority)$", description="Sub-word to word label rule")

    @model_validator(mode="after")
    def _check_mode(self) -> RunConfig:
        if self.mode is RunMode.DISTILL and not self.teacher_checkpoint:
            raise ValueError("distill mode needs teacher_checkpoint")
        return self

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return DEFAULT_FINETUNE_EPOCHS.get(self.mode, 1)


@dataclass(frozen=True)
class TrainRecord:
    step: int
    loss: float
    accuracy: float | None
    ms_per_step: float
    components: dict[str, float] = field(default_factory=dict)


@dataclass
class TrainReport:
    """Loss trajectory of a run plus its final metrics."""

    records: list[TrainRecord] = field(default_factory=list)
    final_metrics: dict[str, float] = field(default_factory=dict)

    def add(self, record: TrainRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError(f"report steps must increase, got {record.step} after {self.records[-1].step}")
        values = [record.loss, record.ms_per_step, *record.components.values()]
        if record.accuracy is not None:
            values.append(record.accuracy)
        if not all(math.isfinite(v) for v in values):
            raise NonFiniteError(f"non-finite value in report entry for step {record.step}: {record}")
        self.records.append(record)

    @property
    def steps(self) -> list[int]:
        return [r.step for r in self.records]

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.records]

    def component(self, name: str) -> list[float]:
        return [r.components[name] for r in self.records if name in r.components]

    def to_csv(self, path: str | Path) -> Path:
        """Write ``step,loss,accuracy,ms_per_step`` rows."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "loss", "accuracy", "ms_per_step"])
            for r in self.records:
                accuracy = "" if r.accuracy is None else f"{r.accuracy:.6f}"
                writer.writerow([r.step, f"{r.loss:.6f}", accuracy, f"{r.ms_per_step:.3f}"])
        return path


@dataclass(frozen=True)
class MLMCorpus:
    """Packed MLM blocks split into training and held-out sets."""

    train: IntArray
    heldout: IntArray
    vocab: Vocab

    def __post_init__(self) -> None:
        if len(self.train) == 0:
            raise ValueError("MLM corpus has no training blocks")


@dataclass(frozen=True)
class LabeledBatch:
    """Fine-tuning inputs; ``targets`` is ``[B, N]`` (token tasks) or ``[B]`` (sequence tasks)."""

    input_ids: IntArray
    attention_mask: IntArray
    targets: IntArray

    def take(self, rows: IntArray) -> LabeledBatch:
        return LabeledBatch(self.input_ids[rows], self.attention_mask[rows], self.targets[rows])

    def __len__(self) -> int:
        return int(self.input_ids.shape[0])
