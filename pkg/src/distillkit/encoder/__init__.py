"""BERT-style encoders: standard and bottleneck blocks, heads, checkpoints."""

from distillkit.encoder.bottleneck import bottleneck_block, bottleneck_forward
from distillkit.encoder.checkpoint import load_checkpoint, save_checkpoint
from distillkit.encoder.heads import add_task_head, task_head_seq, task_head_token
from distillkit.encoder.layers import MASK_BIAS, AttentionContext, EncoderInput
from distillkit.encoder.models import (
    CaptureMode,
    CheckpointManifest,
    EncoderConfig,
    EncoderOutputs,
    EncoderVariant,
    ModelState,
    TaskHeadKind,
)
from distillkit.encoder.params import (
    PRESET_NAMES,
    count_params,
    estimate_activation_bytes,
    init_model_state,
    parameter_shapes,
    preset,
    truncated_normal,
)
from distillkit.encoder.transformer import forward, standard_block

__all__ = [
    "MASK_BIAS",
    "PRESET_NAMES",
    "AttentionContext",
    "CaptureMode",
    "CheckpointManifest",
    "EncoderConfig",
    "EncoderInput",
    "EncoderOutputs",
    "EncoderVariant",
    "ModelState",
    "TaskHeadKind",
    "add_task_head",
    "bottleneck_block",
    "bottleneck_forward",
    "count_params",
    "estimate_activation_bytes",
    "forward",
    "init_model_state",
    "load_checkpoint",
    "parameter_shapes",
    "preset",
    "save_checkpoint",
    "standard_block",
    "task_head_seq",
    "task_head_token",
    "truncated_normal",
]
