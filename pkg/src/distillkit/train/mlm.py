"""Distillation and continual MLM pretraining runs."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from distillkit.corpus.models import MaskedBatch
from distillkit.distill import (
    DistillPlan,
    DistillProjections,
    DistillSuite,
    compute_distill_loss,
    init_student_from_teacher,
    loss_mlm,
    validate_plan,
)
from distillkit.encoder import (
    CaptureMode,
    EncoderConfig,
    ModelState,
    forward,
    init_model_state,
    save_checkpoint,
)
from distillkit.errors import EmptyMaskWarning, IncompatiblePlanError
from distillkit.numerics import Tensor, no_grad, resolve_dtype
from distillkit.train.data import heldout_batches, mlm_batch_producer
from distillkit.train.loop import optimise
from distillkit.train.models import MLMCorpus, RunConfig, TrainReport

logger = logging.getLogger(__name__)

# Separates the dropout stream from the batch-sampling stream of one seed.
DROPOUT_STREAM = 7


def masked_accuracy(logits: Tensor | np.ndarray, batch: MaskedBatch) -> float:
    """Top-1 accuracy at masked positions (0 when nothing is masked)."""
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    selected = np.asarray(batch.mask_indicator, dtype=bool)
    if not selected.any():
        return 0.0
    predicted = values.argmax(axis=-1)
    return float((predicted[selected] == np.asarray(batch.labels)[selected]).mean())


def evaluate_mlm(state: ModelState, batches: Sequence[MaskedBatch]) -> tuple[float, float] | None:
    """Masked-token loss and top-1 accuracy over ``batches``, weighted by masked count."""
    total_loss = total_correct = 0.0
    total_masked = 0
    with no_grad(), warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyMaskWarning)
        for batch in batches:
            count = batch.num_masked
            if count == 0:
                continue
            out = forward(state, batch, CaptureMode.LOGITS_ONLY)
            total_loss += loss_mlm(out, batch).item() * count
            total_correct += masked_accuracy(out.require_logits(), batch) * count
            total_masked += count
    if total_masked == 0:
        return None
    return total_loss / total_masked, total_correct / total_masked


def _checkpointer(state: ModelState, out_dir: str | Path | None, name: str) -> Callable[[int], None] | None:
    if out_dir is None:
        return None
    path = Path(out_dir) / name

    def save(step: int) -> None:
        save_checkpoint(state, path)
        logger.debug(f"Checkpointed {name} at step {step}")

    return save


def _final_metrics(state: ModelState, heldout: Sequence[MaskedBatch]) -> dict[str, float]:
    scores = evaluate_mlm(state, heldout)
    if scores is None:
        return {}
    return {"heldout_mlm_loss": scores[0], "heldout_masked_accuracy": scores[1]}


def _initial_student(teacher: ModelState, student_config: EncoderConfig, seed: int, dtype: np.dtype) -> ModelState:
    try:
        return init_student_from_teacher(teacher, student_config)
    except IncompatiblePlanError as exc:
        logger.info(f"Random student initialisation: {exc}")
        return init_model_state(student_config, seed=seed, dtype=dtype)


def run_distillation(
    teacher: ModelState,
    student_config: EncoderConfig,
    corpus: MLMCorpus,
    config: RunConfig,
    out_dir: str | Path | None = None,
) -> tuple[ModelState, TrainReport]:
    """Distil ``teacher`` into a student of ``student_config`` on ``corpus``.

    The student copies teacher weights when the shapes allow it and starts
    from random weights otherwise. The teacher runs without dropout and
    without gradient recording. With ``out_dir`` the student is checkpointed
    to ``out_dir/student.ckpt`` at every report point.

    Raises:
        IncompatiblePlanError: The plan does not fit the student/teacher pair.
        NonFiniteError: The loss diverged.
    """
    dtype = resolve_dtype(config.precision)
    teacher = teacher.astype(dtype).freeze()
    plan = validate_plan(config.plan or DistillPlan(), student_config, teacher.config)
    student = _initial_student(teacher, student_config, config.seed, dtype).astype(dtype)
    projections = DistillProjections.for_pair(student_config, teacher.config, seed=config.seed, dtype=dtype)
    if config.steps == 0:
        return student, TrainReport()

    capture = CaptureMode.LOGITS_ONLY if plan.suite is DistillSuite.DISTIL_TRIPLE else CaptureMode.FULL
    dropout_rng = np.random.default_rng((config.seed, DROPOUT_STREAM))
    heldout = heldout_batches(corpus, config.masking, config.batch_size, config.seed)

    def step_loss(step: int, batch: MaskedBatch) -> tuple[Tensor, dict[str, float]]:
        with no_grad():
            teacher_out = forward(teacher, batch, capture)
        student_out = forward(student, batch, capture, train=True, rng=dropout_rng)
        breakdown = compute_distill_loss(plan, student_out, teacher_out, batch, projections)
        return breakdown.total, breakdown.components

    trainable = {**student.backbone_parameters(), **dict(projections.named_parameters())}
    logger.info(
        f"Distilling {teacher.config.name} ({teacher.config.num_layers}L) into "
        f"{student_config.name} ({student_config.num_layers}L) with {plan.suite.value} for {config.steps} steps"
    )
    report = optimise(
        trainable,
        mlm_batch_producer(corpus, config.masking, config.batch_size, config.seed),
        step_loss,
        config.steps,
        config,
        evaluate=lambda: _accuracy_only(student, heldout),
        on_record=_checkpointer(student, out_dir, "student.ckpt"),
    )
    report.final_metrics = _final_metrics(student, heldout)
    return student, report


def _accuracy_only(state: ModelState, heldout: Sequence[MaskedBatch]) -> float | None:
    scores = evaluate_mlm(state, heldout)
    return None if scores is None else scores[1]


def run_mlm_pretrain(
    init: ModelState,
    corpus: MLMCorpus,
    config: RunConfig,
    out_dir: str | Path | None = None,
) -> tuple[ModelState, TrainReport]:
    """Continue training ``init`` on the MLM objective alone.

    ``init`` is not modified; the trained copy is returned with a report of
    the loss and held-out masked accuracy trajectory.
    """
    dtype = resolve_dtype(config.precision)
    state = init.astype(dtype)
    if config.steps == 0:
        return state, TrainReport()
    dropout_rng = np.random.default_rng((config.seed, DROPOUT_STREAM))
    heldout = heldout_batches(corpus, config.masking, config.batch_size, config.seed)

    def step_loss(step: int, batch: MaskedBatch) -> tuple[Tensor, dict[str, float]]:
        out = forward(state, batch, CaptureMode.LOGITS_ONLY, train=True, rng=dropout_rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyMaskWarning)
            loss = loss_mlm(out, batch)
        return loss, {"mlm": loss.item()}

    logger.info(f"MLM pretraining {state.config.name} for {config.steps} steps")
    report = optimise(
        state.backbone_parameters(),
        mlm_batch_producer(corpus, config.masking, config.batch_size, config.seed),
        step_loss,
        config.steps,
        config,
        evaluate=lambda: _accuracy_only(state, heldout),
        on_record=_checkpointer(state, out_dir, "model.ckpt"),
    )
    report.final_metrics = _final_metrics(state, heldout)
    return state, report
