"""Task metrics: entity F1, macro/binary P/R/F and ranked-answer accuracy."""

from distillkit.eval.metrics import (
    bio_to_spans,
    collapse_to_words,
    entity_f1,
    macro_prf,
    ranked_qa,
)
from distillkit.eval.models import ClassScores, MetricKind, MetricReport

__all__ = [
    "ClassScores",
    "MetricKind",
    "MetricReport",
    "bio_to_spans",
    "collapse_to_words",
    "entity_f1",
    "macro_prf",
    "ranked_qa",
]
