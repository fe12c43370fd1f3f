"""Data models for the corpus module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator

IntArray = NDArray[np.int64]


class MaskingConfig(BaseModel):
    """MLM corruption rates.

    A selected token becomes MASK with ``mask_prob``, a random ordinary token
    with ``random_prob`` and stays unchanged otherwise. The default 80/20 rule
    keeps nothing; 0.8/0.1/0.1 gives the classic BERT rule.
    """

    model_config = {"extra": "forbid"}

    select_rate: float = Field(0.15, ge=0.0, lt=1.0, description="Per-token selection probability")
    mask_prob: float = Field(0.8, ge=0.0, le=1.0, description="P(MASK | selected)")
    random_prob: float = Field(0.2, ge=0.0, le=1.0, description="P(random token | selected)")

    @model_validator(mode="after")
    def _check_total(self) -> MaskingConfig:
        if self.mask_prob + self.random_prob > 1.0 + 1e-12:
            raise ValueError(
                f"mask_prob + random_prob must not exceed 1 (got {self.mask_prob} + {self.random_prob})"
            )
        return self

    @property
    def keep_prob(self) -> float:
        return max(0.0, 1.0 - self.mask_prob - self.random_prob)


@dataclass(frozen=True)
class MaskedBatch:
    """One MLM batch.

    ``labels`` holds the original id where ``mask_indicator`` is 1 and
    ``IGNORE_INDEX`` elsewhere.
    """

    input_ids: IntArray
    labels: IntArray
    mask_indicator: IntArray
    attention_mask: IntArray

    @property
    def batch_size(self) -> int:
        return int(self.input_ids.shape[0])

    @property
    def seq_len(self) -> int:
        return int(self.input_ids.shape[1])

    @property
    def num_masked(self) -> int:
        return int(self.mask_indicator.sum())

    def take(self, rows: Any) -> MaskedBatch:
        """Row subset (or permutation) of the batch."""
        return MaskedBatch(
            input_ids=self.input_ids[rows],
            labels=self.labels[rows],
            mask_indicator=self.mask_indicator[rows],
            attention_mask=self.attention_mask[rows],
        )

    @classmethod
    def unmasked(cls, input_ids: IntArray, pad_id: int, ignore_index: int) -> MaskedBatch:
        """A batch with nothing selected (inference, fine-tuning inputs)."""
        ids = np.asarray(input_ids, dtype=np.int64)
        return cls(
            input_ids=ids,
            labels=np.full_like(ids, ignore_index),
            mask_indicator=np.zeros_like(ids),
            attention_mask=(ids != pad_id).astype(np.int64),
        )


@dataclass(frozen=True)
class LabeledSequence:
    """Words with per-word labels (NER) or a single sequence label (RE)."""

    words: tuple[str, ...]
    labels: tuple[str, ...] | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.labels is not None and len(self.labels) != len(self.words):
            raise ValueError(f"{len(self.words)} words but {len(self.labels)} labels")

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class QARecord:
    """A (question, context, answer) triple."""

    question: str
    context: str
    answer: str


class SynthSpec(BaseModel):
    """Grammar of a synthetic corpus.

    Templates are whitespace-separated words; ``{Name}`` slots are filled from
    ``entities`` (and labelled as that entity type) or from ``fillers``
    (labelled O).
    """

    model_config = {"extra": "forbid"}

    domain: str = Field("biomedical", description="Name recorded in manifests")
    entities: dict[str, list[str]] = Field(..., description="Entity type -> surface forms")
    fillers: dict[str, list[str]] = Field(default_factory=dict, description="Slot -> words (label O)")
    templates: list[str] = Field(..., description="Sentence templates")
    num_sentences: int = Field(1000, ge=1, description="Sentences to generate")
    heldout_fraction: float = Field(0.1, ge=0.0, lt=1.0, description="Share held out")


@dataclass
class SynthCorpus:
    """Generated sentences with gold BIO labels and a held-out split."""

    train: list[LabeledSequence]
    heldout: list[LabeledSequence]
    label_set: list[str]
    domain: str = "biomedical"
    metadata: dict[str, Any] = field(default_factory=dict)

    def texts(self, split: str = "train") -> list[str]:
        return [s.text for s in (self.train if split == "train" else self.heldout)]
