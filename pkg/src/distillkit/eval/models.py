"""Data models for the evaluation module."""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, model_validator


class MetricKind(str, Enum):
    ENTITY = "entity"  # exact-match span P/R/F1, micro-averaged
    MACRO = "macro"  # unweighted mean of per-class P/R/F
    BINARY = "binary"  # positive-class P/R/F
    RANKING = "ranking"  # strict/lenient accuracy and MRR


class ClassScores(BaseModel):
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    support: int = Field(..., ge=0, description="Gold occurrences")


class MetricReport(BaseModel):
    """Scores of one evaluation; unused fields stay ``None``."""

    kind: MetricKind
    precision: float | None = Field(None, ge=0.0, le=1.0)
    recall: float | None = Field(None, ge=0.0, le=1.0)
    f1: float | None = Field(None, ge=0.0, le=1.0)
    strict_acc: float | None = Field(None, ge=0.0, le=1.0)
    lenient_acc: float | None = Field(None, ge=0.0, le=1.0)
    mrr: float | None = Field(None, ge=0.0, le=1.0)
    per_class: dict[str, ClassScores] = Field(default_factory=dict)
    count: int = Field(0, ge=0, description="Sequences, examples or questions scored")

    @model_validator(mode="after")
    def _check_fields(self) -> MetricReport:
        if self.kind is MetricKind.RANKING:
            if None in (self.strict_acc, self.lenient_acc, self.mrr):
                raise ValueError("ranking reports need strict_acc, lenient_acc and mrr")
        elif None in (self.precision, self.recall, self.f1):
            raise ValueError(f"{self.kind.value} reports need precision, recall and f1")
        return self

    def headline(self) -> dict[str, float]:
        if self.kind is MetricKind.RANKING:
            return {"strict_acc": self.strict_acc or 0.0, "lenient_acc": self.lenient_acc or 0.0, "mrr": self.mrr or 0.0}
        return {"precision": self.precision or 0.0, "recall": self.recall or 0.0, "f1": self.f1 or 0.0}

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    def to_table(self, name: str = "model") -> str:
        """Aligned plain-text table: one header row, one score row, then per-class rows."""
        columns = list(self.headline())
        header = ["", *(_short(c) for c in columns)]
        rows = [[name, *(f"{100 * v:.2f}" for v in self.headline().values())]]
        for label, scores in sorted(self.per_class.items()):
            rows.append([f"  {label}", f"{100 * scores.precision:.2f}", f"{100 * scores.recall:.2f}", f"{100 * scores.f1:.2f}"])
        widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
        lines = [
            "  ".join(cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(row))
            for row in [header, *rows]
        ]
        return "\n".join(line.rstrip() for line in lines)


def _short(column: str) -> str:
    return {"precision": "P", "recall": "R", "f1": "F", "strict_acc": "S", "lenient_acc": "L", "mrr": "M"}[column]
