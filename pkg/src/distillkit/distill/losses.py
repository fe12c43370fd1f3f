"""Distillation losses.

Every loss takes the outputs of one student forward and one teacher forward
on the same batch and returns a scalar :class:`Tensor`. Teacher values are
treated as constants. Token-position averages run over real (non-padding)
positions only.
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from typing import Any, TypeVar

import numpy as np

from distillkit.corpus.models import MaskedBatch
from distillkit.distill.models import LayerMap
from distillkit.encoder.models import EncoderOutputs
from distillkit.errors import EmptyMaskWarning, IncompatiblePlanError, ShapeMismatchError
from distillkit.numerics import (
    Tensor,
    cosine_similarity,
    kl_divergence,
    log_softmax,
    masked_mean,
    matmul,
    mse,
    safe_log,
    softmax,
)

Scalar = TypeVar("Scalar", float, Tensor)


def _zero(like: Tensor) -> Tensor:
    return (like * 0.0).sum()


def _constant(t: Tensor) -> Tensor:
    return Tensor(t.data)


def _project(h: Tensor, weight: Tensor | None) -> Tensor:
    return matmul(h, weight) if weight is not None else h


def _check_width(student: Tensor, teacher: Tensor, what: str) -> None:
    if student.shape != teacher.shape:
        raise ShapeMismatchError(
            f"{what}: student {student.shape} vs teacher {teacher.shape}; "
            "project the student with W_h when hidden sizes differ"
        )


def _masked_rows(logits: Tensor, batch: MaskedBatch) -> tuple[Tensor, tuple[np.ndarray, np.ndarray]]:
    rows, cols = np.nonzero(np.asarray(batch.mask_indicator))
    return logits[rows, cols], (rows, cols)


def _normalise(total: Tensor, count: int, sum_masked: bool) -> Tensor:
    return total if sum_masked else total / float(count)


def _warn_empty(name: str) -> None:
    warnings.warn(f"{name}: batch has no masked tokens, loss is 0", EmptyMaskWarning, stacklevel=3)


def _masked_mse(a: Tensor, b: Tensor, mask: np.ndarray) -> Tensor:
    diff = a - b
    return masked_mean((diff * diff).mean(axis=-1), mask)


def _attention_kl(student: Tensor, teacher: Tensor, swap: bool) -> Tensor:
    """Row-wise KL between attention maps, ``[B, H, N]``; student is ``p`` unless ``swap``."""
    target = _constant(teacher)
    if student.shape[1] != target.shape[1]:
        raise IncompatiblePlanError(
            f"attention alignment needs equal head counts, student {student.shape[1]} vs teacher {target.shape[1]}"
        )
    _check_width(student, target, "attention maps")
    if swap:
        return kl_divergence(target, student, axis=-1)
    return kl_divergence(student, target, axis=-1)


def _check_layer(layer: int, outputs: EncoderOutputs) -> None:
    if not 1 <= layer <= outputs.num_layers:
        raise IndexError(f"student layer {layer} outside 1..{outputs.num_layers}")


# ------------------------------------------------------------- output level


def loss_mlm(outputs: EncoderOutputs, batch: MaskedBatch, sum_masked: bool = False) -> Tensor:
    """Cross entropy of the original ids at masked positions.

    Averaged over masked tokens, or summed with ``sum_masked``. A batch
    without masked tokens gives 0 and an :class:`EmptyMaskWarning`.
    """
    logits = outputs.require_logits()
    count = batch.num_masked
    if count == 0:
        _warn_empty("loss_mlm")
        return _zero(logits)
    rows, (r, c) = _masked_rows(logits, batch)
    labels = np.asarray(batch.labels)[r, c]
    vocab = logits.shape[-1]
    if labels.min() < 0 or labels.max() >= vocab:
        raise ValueError(f"masked labels must lie in [0, {vocab}), got [{labels.min()}, {labels.max()}]")
    log_probs = log_softmax(rows, axis=-1)
    picked = log_probs[np.arange(count), labels]
    return _normalise(-picked.sum(), count, sum_masked)


def loss_soft_mlm(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    temperature: float = 1.0,
    sum_masked: bool = False,
) -> Tensor:
    """``KL(teacher || student)`` of the vocabulary distributions at masked positions."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    s_logits = student_out.require_logits()
    t_logits = teacher_out.require_logits()
    if s_logits.shape != t_logits.shape:
        raise ShapeMismatchError(
            f"soft MLM needs a shared vocabulary: student logits {s_logits.shape} vs teacher {t_logits.shape}"
        )
    count = batch.num_masked
    if count == 0:
        _warn_empty("loss_soft_mlm")
        return _zero(s_logits)
    s_rows, _ = _masked_rows(s_logits, batch)
    t_rows, _ = _masked_rows(_constant(t_logits), batch)
    p_teacher = softmax(t_rows / temperature, axis=-1)
    log_q = log_softmax(s_rows / temperature, axis=-1)
    kl = (p_teacher * (safe_log(p_teacher) - log_q)).sum(axis=-1)
    return _normalise(kl.sum(), count, sum_masked)


def loss_align(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch | None = None,
    w_h: Tensor | None = None,
) -> Tensor:
    """Mean over positions of ``1 - cos(h_t, h_s)`` on the final hidden states."""
    h_s = _project(student_out.last_hidden, w_h)
    h_t = _constant(teacher_out.last_hidden)
    _check_width(h_s, h_t, "loss_align")
    mask = student_out.attention_mask if batch is None else batch.attention_mask
    return masked_mean(1.0 - cosine_similarity(h_t, h_s, axis=-1), mask)


def loss_output(student_out: EncoderOutputs, teacher_out: EncoderOutputs) -> Tensor:
    """Cross entropy of the student against the teacher's soft labels, every real position."""
    s_logits = student_out.require_logits()
    t_logits = teacher_out.require_logits()
    if s_logits.shape != t_logits.shape:
        raise ShapeMismatchError(
            f"loss_output needs a shared vocabulary: student logits {s_logits.shape} vs teacher {t_logits.shape}"
        )
    p_teacher = softmax(_constant(t_logits), axis=-1)
    ce = -(p_teacher * log_softmax(s_logits, axis=-1)).sum(axis=-1)
    return masked_mean(ce, student_out.attention_mask)


# -------------------------------------------------------------- layer level


def loss_embed(
    e_s: Tensor, e_t: Tensor, w_e: Tensor | None = None, mask: np.ndarray | None = None
) -> Tensor:
    """``MSE(E_s W_e, E_t)``; with ``mask`` only real positions of ``[B, N, D]`` inputs count."""
    projected = _project(e_s, w_e)
    target = _constant(e_t)
    if projected.shape != target.shape:
        raise ShapeMismatchError(f"loss_embed: projected student {projected.shape} vs teacher {target.shape}")
    if mask is None:
        return mse(projected, target)
    return _masked_mse(projected, target, mask)


def loss_layer(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    layer_map: LayerMap,
    layer: int,
    w_h: Tensor | None = None,
) -> Tensor:
    """Hidden-state MSE (after ``W_h``) plus attention MSE against layer ``g(l)``.

    Both terms average over real query positions; the attention term first
    averages over keys and heads.
    """
    student_out.require_full()
    teacher_out.require_full()
    _check_layer(layer, student_out)
    target = layer_map(layer)
    h_s = _project(student_out.hidden_states[layer], w_h)
    h_t = _constant(teacher_out.hidden_states[target])
    _check_width(h_s, h_t, f"loss_layer({layer})")
    a_s = student_out.attentions[layer - 1]
    a_t = _constant(teacher_out.attentions[target - 1])
    if a_s.shape[1] != a_t.shape[1]:
        raise IncompatiblePlanError(
            f"loss_layer needs equal head counts, student {a_s.shape[1]} vs teacher {a_t.shape[1]}"
        )
    mask = student_out.attention_mask
    diff = a_s - a_t
    attention = masked_mean((diff * diff).mean(axis=-1).mean(axis=1), mask)
    return _masked_mse(h_s, h_t, mask) + attention


def loss_compact_layer(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    layer_map: LayerMap,
    layer: int,
    swap_attention_kl: bool = False,
) -> Tensor:
    """Position-mean cosine loss plus head- and position-mean attention KL against layer ``g(l)``."""
    student_out.require_full()
    teacher_out.require_full()
    _check_layer(layer, student_out)
    target = layer_map(layer)
    h_s = student_out.hidden_states[layer]
    h_t = _constant(teacher_out.hidden_states[target])
    _check_width(h_s, h_t, f"loss_compact_layer({layer})")
    mask = student_out.attention_mask
    cosine = masked_mean(1.0 - cosine_similarity(h_s, h_t, axis=-1), mask)
    kl = _attention_kl(student_out.attentions[layer - 1], teacher_out.attentions[target - 1], swap_attention_kl)
    return cosine + masked_mean(kl.mean(axis=1), mask)


def loss_mobile_layer(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    layer: int,
    swap_attention_kl: bool = False,
) -> Tensor:
    """Same-index hidden MSE plus attention KL summed over positions and averaged over heads."""
    student_out.require_full()
    teacher_out.require_full()
    if student_out.num_layers != teacher_out.num_layers:
        raise IncompatiblePlanError(
            f"mobile distillation needs equal depth, student {student_out.num_layers} "
            f"vs teacher {teacher_out.num_layers}"
        )
    _check_layer(layer, student_out)
    h_s = student_out.hidden_states[layer]
    h_t = _constant(teacher_out.hidden_states[layer])
    if h_s.shape != h_t.shape:
        raise IncompatiblePlanError(
            f"mobile distillation needs equal hidden sizes, student {h_s.shape} vs teacher {h_t.shape}"
        )
    hidden = _masked_mse(h_s, h_t, student_out.attention_mask)
    kl = _attention_kl(student_out.attentions[layer - 1], teacher_out.attentions[layer - 1], swap_attention_kl)
    return hidden + kl.sum(axis=-1).mean()


# -------------------------------------------------------------- combination


def combine_distil_triple(
    mlm: Scalar, soft_mlm: Scalar, align: Scalar, alphas: Sequence[float]
) -> Scalar:
    a1, a2, a3 = alphas
    return a1 * mlm + a2 * soft_mlm + a3 * align


def combine_tiny(
    embed: Scalar, layers: Sequence[Scalar], output: Scalar, lambdas: Sequence[float]
) -> Scalar:
    if len(lambdas) != len(layers) + 2:
        raise IncompatiblePlanError(f"need {len(layers) + 2} lambdas, got {len(lambdas)}")
    total: Any = lambdas[0] * embed
    for weight, term in zip(lambdas[1:-1], layers, strict=True):
        total = total + weight * term
    return total + lambdas[-1] * output


def combine_compact(
    mlm: Scalar, soft_mlm: Scalar, layers: Sequence[Scalar], alphas: Sequence[float]
) -> Scalar:
    a1, a2, a3 = alphas
    layer_sum: Any = 0.0
    for term in layers:
        layer_sum = layer_sum + term
    return a1 * mlm + a2 * soft_mlm + a3 * layer_sum


def combine_mobile(mlm: Scalar, layers: Sequence[Scalar], alpha: float) -> Scalar:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    if not layers:
        raise ValueError("mobile loss needs at least one layer term")
    layer_sum: Any = 0.0
    for term in layers:
        layer_sum = layer_sum + term
    return alpha * mlm + (1.0 - alpha) * (layer_sum / float(len(layers)))
