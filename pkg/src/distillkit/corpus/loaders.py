"""Readers and writers for CoNLL, TSV pair and TSV QA files."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from distillkit.corpus.models import LabeledSequence, QARecord
from distillkit.errors import DataFormatError

logger = logging.getLogger(__name__)


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    return path.read_text(encoding="utf-8").splitlines()


def load_conll(path: str | Path) -> list[LabeledSequence]:
    """Read ``token<TAB or SPACE>label`` lines; blank lines end sentences."""
    path = Path(path)
    sequences: list[LabeledSequence] = []
    words: list[str] = []
    labels: list[str] = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            if words:
                sequences.append(LabeledSequence(tuple(words), tuple(labels)))
                words, labels = [], []
            continue
        fields = line.split()
        if len(fields) != 2:
            raise DataFormatError(
                path, lineno, f"expected 'token label', found {len(fields)} fields: {line!r}"
            )
        words.append(fields[0])
        labels.append(fields[1])
    if words:
        sequences.append(LabeledSequence(tuple(words), tuple(labels)))
    logger.info(f"Loaded {len(sequences)} sentences from {path}")
    return sequences


def load_pairs(path: str | Path) -> list[LabeledSequence]:
    """Read ``text<TAB>label`` sequence-classification records."""
    path = Path(path)
    records: list[LabeledSequence] = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise DataFormatError(path, lineno, "expected 'text<TAB>label'")
        text, label = fields[0].strip(), fields[1].strip()
        if not text:
            raise DataFormatError(path, lineno, "empty text field")
        if not label:
            raise DataFormatError(path, lineno, "missing label")
        records.append(LabeledSequence(tuple(text.split()), label=label))
    logger.info(f"Loaded {len(records)} records from {path}")
    return records


def load_qa(path: str | Path) -> list[QARecord]:
    """Read ``question<TAB>context<TAB>answer`` records."""
    path = Path(path)
    records: list[QARecord] = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("\t")]
        if len(fields) != 3 or not all(fields):
            raise DataFormatError(path, lineno, "expected 'question<TAB>context<TAB>answer'")
        question, context, answer = fields
        if answer not in context:
            logger.warning(f"{path}:{lineno}: answer does not occur in its context")
        records.append(QARecord(question, context, answer))
    logger.info(f"Loaded {len(records)} QA records from {path}")
    return records


def label_inventory(sequences: Iterable[LabeledSequence]) -> list[str]:
    """Sorted set of labels (per-word or per-sequence) seen in ``sequences``."""
    seen: set[str] = set()
    for seq in sequences:
        if seq.labels is not None:
            seen.update(seq.labels)
        if seq.label is not None:
            seen.add(seq.label)
    return sorted(seen)


def write_conll(sequences: Sequence[LabeledSequence], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for seq in sequences:
            if seq.labels is None:
                raise ValueError("write_conll needs per-word labels")
            for word, label in zip(seq.words, seq.labels, strict=True):
                handle.write(f"{word}\t{label}\n")
            handle.write("\n")
    return path


def write_pairs(sequences: Sequence[LabeledSequence], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for seq in sequences:
            if seq.label is None:
                raise ValueError("write_pairs needs a sequence label")
            handle.write(f"{seq.text}\t{seq.label}\n")
    return path
