"""Token- and sequence-level classification heads on top of the encoder."""

from __future__ import annotations

import logging

import numpy as np

from distillkit.encoder.models import EncoderOutputs, ModelState, TaskHeadKind
from distillkit.encoder.params import truncated_normal
from distillkit.errors import ShapeMismatchError
from distillkit.numerics import Tensor, linear

logger = logging.getLogger(__name__)


def _head_prefix(kind: TaskHeadKind) -> str:
    return f"head.{kind.value}."


def add_task_head(
    state: ModelState, kind: TaskHeadKind | str, num_labels: int, seed: int = 0
) -> ModelState:
    """Attach (or replace) a linear head mapping ``hidden_dim`` to ``num_labels``.

    Args:
        state: Encoder to extend in place.
        kind: ``token`` for per-position labels, ``sequence`` for CLS labels.
        num_labels: Size of the label set; must be at least 2.
        seed: Seed for the truncated-normal weight draw.

    Returns:
        The same ``state``, for chaining.
    """
    kind = TaskHeadKind(kind)
    if num_labels < 2:
        raise ValueError(f"a task head needs at least 2 labels, got {num_labels}")
    rng = np.random.default_rng(seed)
    prefix = _head_prefix(kind)
    dim = state.config.hidden_dim
    weight = truncated_normal(rng, (dim, num_labels), state.config.init_std, state.dtype)
    state.params[f"{prefix}weight"] = Tensor(weight, name=f"{prefix}weight")
    state.params[f"{prefix}bias"] = Tensor(np.zeros(num_labels, dtype=state.dtype), name=f"{prefix}bias")
    state.head_labels[kind.value] = num_labels
    logger.debug(f"Added {kind.value} head with {num_labels} labels to {state.config.name}")
    return state


def _head(state: ModelState, kind: TaskHeadKind, num_labels: int | None) -> tuple[Tensor, Tensor]:
    prefix = _head_prefix(kind)
    if f"{prefix}weight" not in state:
        raise ValueError(f"model has no {kind.value} head; call add_task_head first")
    expected = state.head_labels[kind.value]
    if num_labels is not None and num_labels != expected:
        raise ShapeMismatchError(
            f"{kind.value} head was built for {expected} labels, task has {num_labels}"
        )
    return state[f"{prefix}weight"], state[f"{prefix}bias"]


def task_head_token(state: ModelState, outputs: EncoderOutputs, num_labels: int | None = None) -> Tensor:
    """Per-position label logits ``[B, N, C]``."""
    weight, bias = _head(state, TaskHeadKind.TOKEN, num_labels)
    return linear(outputs.last_hidden, weight, bias)


def task_head_seq(state: ModelState, outputs: EncoderOutputs, num_labels: int | None = None) -> Tensor:
    """Label logits ``[B, C]`` from the final hidden state at the CLS position."""
    weight, bias = _head(state, TaskHeadKind.SEQUENCE, num_labels)
    return linear(outputs.last_hidden[:, 0, :], weight, bias)
