"""Initialising a student from the teacher's weights."""

from __future__ import annotations

import logging

from distillkit.distill.layer_map import uniform_layer_map
from distillkit.encoder.models import EncoderConfig, ModelState
from distillkit.encoder.params import parameter_shapes
from distillkit.errors import IncompatiblePlanError
from distillkit.numerics import Tensor

logger = logging.getLogger(__name__)


def teacher_layer_for(student_layer: int, student_layers: int, teacher_layers: int) -> int:
    """0-based teacher block copied into 0-based student block ``student_layer``.

    Every other layer (0, 2, 4, ...) when the teacher is exactly twice as
    deep, otherwise the uniform map shifted to 0-based indices.
    """
    if teacher_layers == 2 * student_layers:
        return 2 * student_layer
    return uniform_layer_map(student_layers, teacher_layers)(student_layer + 1) - 1


def init_student_from_teacher(teacher: ModelState, student_config: EncoderConfig) -> ModelState:
    """Student whose embeddings, MLM head and blocks are copies of teacher tensors.

    Raises:
        IncompatiblePlanError: The student is deeper than the teacher or any
            copied tensor would change shape; such students must be
            initialised randomly with ``init_model_state``.
    """
    t_cfg = teacher.config
    m, n = student_config.num_layers, t_cfg.num_layers
    if m > n:
        raise IncompatiblePlanError(f"student has {m} layers but the teacher only {n}")
    mismatched = [
        field
        for field in ("hidden_dim", "embed_dim", "vocab_size", "num_heads", "variant", "bottleneck_dim",
                      "num_ffn_blocks", "ffn_expansion", "max_position", "conv_kernel", "tie_mlm_decoder")
        if getattr(student_config, field) != getattr(t_cfg, field)
    ]
    if mismatched:
        raise IncompatiblePlanError(
            f"cannot copy teacher weights, student differs in {', '.join(mismatched)}; "
            "initialise the student randomly with init_model_state instead"
        )

    sources = {s: teacher_layer_for(s, m, n) for s in range(m)}
    params: dict[str, Tensor] = {}
    for name in parameter_shapes(student_config):
        source = name
        if name.startswith("layers."):
            _, index, rest = name.split(".", 2)
            source = f"layers.{sources[int(index)]}.{rest}"
        params[name] = Tensor(teacher[source].data.copy(), name=name)

    logger.info(
        f"Initialised {m}-layer student from teacher layers {[sources[s] for s in range(m)]}"
    )
    return ModelState(config=student_config.model_copy(deep=True), params=params)
