"""Fine-tuning on token (NER) and sequence (relation) classification tasks."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import numpy as np

from distillkit.corpus import LabeledSequence, label_inventory
from distillkit.encoder import (
    CaptureMode,
    ModelState,
    TaskHeadKind,
    add_task_head,
    forward,
    save_checkpoint,
    task_head_seq,
    task_head_token,
)
from distillkit.errors import ShapeMismatchError
from distillkit.eval import MetricReport, collapse_to_words, entity_f1, macro_prf
from distillkit.numerics import Tensor, log_softmax, no_grad, resolve_dtype
from distillkit.tokenizer import IGNORE_INDEX, Encoding, Vocab, align_labels, encode_words
from distillkit.train.loop import optimise
from distillkit.train.models import LabeledBatch, RunConfig, RunMode, TrainReport

logger = logging.getLogger(__name__)

_HEAD_KIND = {RunMode.FINETUNE_TOKEN: TaskHeadKind.TOKEN, RunMode.FINETUNE_SEQ: TaskHeadKind.SEQUENCE}


def classification_loss(logits: Tensor, targets: np.ndarray, ignore_index: int = IGNORE_INDEX) -> Tensor:
    """Mean cross entropy over targets that are not ``ignore_index``.

    ``logits`` is ``[..., C]`` and ``targets`` has the leading shape.
    Ignored positions contribute neither value nor gradient.
    """
    num_classes = logits.shape[-1]
    flat_logits = logits.reshape(-1, num_classes)
    flat_targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if flat_targets.shape[0] != flat_logits.shape[0]:
        raise ShapeMismatchError(f"{flat_targets.shape[0]} targets for {flat_logits.shape[0]} logit rows")
    keep = np.nonzero(flat_targets != ignore_index)[0]
    if keep.size == 0:
        return (logits * 0.0).sum()
    chosen = flat_targets[keep]
    if chosen.min() < 0 or chosen.max() >= num_classes:
        raise ValueError(f"targets must lie in [0, {num_classes}), got [{chosen.min()}, {chosen.max()}]")
    log_probs = log_softmax(flat_logits[keep], axis=-1)
    return -log_probs[np.arange(keep.size), chosen].mean()


def _label_index(labels: Sequence[str]) -> dict[str, int]:
    return {label: i for i, label in enumerate(labels)}


def _lookup(index: dict[str, int], label: str) -> int:
    try:
        return index[label]
    except KeyError:
        raise ValueError(f"label {label!r} is not in the task label set {sorted(index)}") from None


def encode_labeled(
    sequences: Sequence[LabeledSequence],
    vocab: Vocab,
    labels: Sequence[str],
    mode: RunMode,
    max_len: int,
) -> tuple[LabeledBatch, list[Encoding]]:
    """Encode a labelled dataset; token labels are propagated to every sub-word."""
    index = _label_index(labels)
    encodings = [encode_words(seq.words, vocab, max_len) for seq in sequences]
    if mode is RunMode.FINETUNE_TOKEN:
        targets = []
        for seq, enc in zip(sequences, encodings, strict=True):
            if seq.labels is None:
                raise ValueError(f"token task example has no per-word labels: {seq.text!r}")
            targets.append(align_labels([_lookup(index, lab) for lab in seq.labels], enc))
        target_array = np.array(targets, dtype=np.int64).reshape(len(sequences), max_len)
    else:
        values = []
        for seq in sequences:
            if seq.label is None:
                raise ValueError(f"sequence task example has no label: {seq.text!r}")
            values.append(_lookup(index, seq.label))
        target_array = np.array(values, dtype=np.int64)
    batch = LabeledBatch(
        input_ids=np.array([e.token_ids for e in encodings], dtype=np.int64).reshape(len(sequences), max_len),
        attention_mask=np.array([e.attention_mask for e in encodings], dtype=np.int64).reshape(
            len(sequences), max_len
        ),
        targets=target_array,
    )
    return batch, encodings


def _head_logits(state: ModelState, batch: LabeledBatch, kind: TaskHeadKind, train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
    out = forward(state, batch, CaptureMode.BACKBONE, train=train, rng=rng)
    return task_head_token(state, out) if kind is TaskHeadKind.TOKEN else task_head_seq(state, out)


def predict_ids(state: ModelState, batch: LabeledBatch, kind: TaskHeadKind, batch_size: int = 32) -> np.ndarray:
    """Arg-max label ids, ``[B, N]`` or ``[B]``."""
    pieces = []
    with no_grad():
        for start in range(0, len(batch), batch_size):
            rows = np.arange(start, min(start + batch_size, len(batch)))
            pieces.append(_head_logits(state, batch.take(rows), kind).data.argmax(axis=-1))
    return np.concatenate(pieces, axis=0)


def label_accuracy(predicted: np.ndarray, targets: np.ndarray) -> float:
    keep = targets != IGNORE_INDEX
    if not keep.any():
        return 0.0
    return float((predicted[keep] == targets[keep]).mean())


def predict_token_labels(
    state: ModelState,
    sequences: Sequence[LabeledSequence],
    vocab: Vocab,
    labels: Sequence[str],
    max_len: int,
    rule: Literal["first", "majority"] = "first",
) -> list[list[str]]:
    """Word-level BIO predictions for ``sequences``."""
    encodings = [encode_words(seq.words, vocab, max_len) for seq in sequences]
    ids = np.array([e.token_ids for e in encodings], dtype=np.int64).reshape(len(sequences), max_len)
    mask = np.array([e.attention_mask for e in encodings], dtype=np.int64).reshape(len(sequences), max_len)
    batch = LabeledBatch(ids, mask, np.zeros_like(ids))
    predicted = predict_ids(state, batch, TaskHeadKind.TOKEN)
    return [
        collapse_to_words([labels[i] for i in row], enc.word_index, enc.num_words, rule)
        for row, enc in zip(predicted, encodings, strict=True)
    ]


def predict_sequence_labels(
    state: ModelState, sequences: Sequence[LabeledSequence], vocab: Vocab, labels: Sequence[str], max_len: int
) -> list[str]:
    encodings = [encode_words(seq.words, vocab, max_len) for seq in sequences]
    ids = np.array([e.token_ids for e in encodings], dtype=np.int64).reshape(len(sequences), max_len)
    mask = np.array([e.attention_mask for e in encodings], dtype=np.int64).reshape(len(sequences), max_len)
    predicted = predict_ids(state, LabeledBatch(ids, mask, np.zeros(len(sequences), dtype=np.int64)),
                            TaskHeadKind.SEQUENCE)
    return [labels[i] for i in predicted]


def evaluate_task(
    state: ModelState,
    sequences: Sequence[LabeledSequence],
    vocab: Vocab,
    labels: Sequence[str],
    mode: RunMode,
    max_len: int,
    rule: Literal["first", "majority"] = "first",
) -> MetricReport:
    """Entity F1 for token tasks, macro P/R/F for sequence tasks."""
    if mode is RunMode.FINETUNE_TOKEN:
        predicted = predict_token_labels(state, sequences, vocab, labels, max_len, rule)
        return entity_f1([list(seq.labels or ()) for seq in sequences], predicted)
    predicted_seq = predict_sequence_labels(state, sequences, vocab, labels, max_len)
    return macro_prf([seq.label or "" for seq in sequences], predicted_seq, labels)


def run_finetune(
    init: ModelState,
    dataset: Sequence[LabeledSequence],
    config: RunConfig,
    vocab: Vocab,
    labels: Sequence[str] | None = None,
    eval_dataset: Sequence[LabeledSequence] | None = None,
    out_dir: str | Path | None = None,
) -> tuple[ModelState, TrainReport]:
    """Fine-tune ``init`` with a task head for ``config.resolved_epochs`` epochs.

    ``labels`` defaults to the sorted label inventory of ``dataset``. A head
    of the right kind is added when missing.

    Raises:
        ShapeMismatchError: The model already has a head for a different
            number of labels.
        ValueError: A dataset label is outside ``labels``.
    """
    if config.mode not in _HEAD_KIND:
        raise ValueError(f"run_finetune needs a fine-tuning mode, got {config.mode.value}")
    if not dataset:
        raise ValueError("fine-tuning dataset is empty")
    kind = _HEAD_KIND[config.mode]
    label_names = list(labels) if labels is not None else label_inventory(dataset)
    state = init.astype(resolve_dtype(config.precision))
    if kind.value in state.head_labels:
        if state.head_labels[kind.value] != len(label_names):
            raise ShapeMismatchError(
                f"model has a {kind.value} head for {state.head_labels[kind.value]} labels, "
                f"task has {len(label_names)}"
            )
    else:
        add_task_head(state, kind, len(label_names), seed=config.seed)

    data, _ = encode_labeled(dataset, vocab, label_names, config.mode, config.max_len)
    per_epoch = math.ceil(len(data) / config.batch_size)
    total_steps = config.resolved_epochs * per_epoch
    dropout_rng = np.random.default_rng((config.seed, 11))

    def produce(step: int) -> LabeledBatch:
        epoch, position = divmod(step, per_epoch)
        order = np.random.default_rng((config.seed, epoch)).permutation(len(data))
        return data.take(order[position * config.batch_size : (position + 1) * config.batch_size])

    def step_loss(step: int, batch: LabeledBatch) -> tuple[Tensor, dict[str, float]]:
        logits = _head_logits(state, batch, kind, train=True, rng=dropout_rng)
        return classification_loss(logits, batch.targets), {}

    def train_accuracy() -> float:
        return label_accuracy(predict_ids(state, data, kind), data.targets)

    logger.info(
        f"Fine-tuning {state.config.name} on {len(data)} {kind.value} examples, "
        f"{len(label_names)} labels, {config.resolved_epochs} epochs ({total_steps} steps)"
    )
    report = optimise(
        dict(state.named_parameters()),
        produce,
        step_loss,
        total_steps,
        config,
        evaluate=train_accuracy,
        on_record=(lambda step: save_checkpoint(state, Path(out_dir) / "model.ckpt")) if out_dir else None,
    )
    metrics = evaluate_task(
        state, eval_dataset or dataset, vocab, label_names, config.mode, config.max_len,
        "majority" if config.label_rule == "majority" else "first",
    )
    report.final_metrics = {"train_accuracy": train_accuracy(), **metrics.headline()}
    return state, report
