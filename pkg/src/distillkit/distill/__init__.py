"""Distillation losses, layer maps, plans and student initialisation."""

from distillkit.distill.init import init_student_from_teacher, teacher_layer_for
from distillkit.distill.layer_map import resolve_layer_map, uniform_layer_map
from distillkit.distill.losses import (
    combine_compact,
    combine_distil_triple,
    combine_mobile,
    combine_tiny,
    loss_align,
    loss_compact_layer,
    loss_embed,
    loss_layer,
    loss_mlm,
    loss_mobile_layer,
    loss_output,
    loss_soft_mlm,
)
from distillkit.distill.models import (
    DEFAULT_ALPHAS,
    DistillPlan,
    DistillProjections,
    DistillSuite,
    LayerMap,
    LossBreakdown,
)
from distillkit.distill.suites import (
    compute_distill_loss,
    default_plan,
    loss_compact_total,
    loss_distil_triple,
    loss_mobile_total,
    loss_tiny_total,
    needs_projections,
    validate_plan,
)

__all__ = [
    "DEFAULT_ALPHAS",
    "DistillPlan",
    "DistillProjections",
    "DistillSuite",
    "LayerMap",
    "LossBreakdown",
    "combine_compact",
    "combine_distil_triple",
    "combine_mobile",
    "combine_tiny",
    "compute_distill_loss",
    "default_plan",
    "init_student_from_teacher",
    "loss_align",
    "loss_compact_layer",
    "loss_compact_total",
    "loss_distil_triple",
    "loss_embed",
    "loss_layer",
    "loss_mlm",
    "loss_mobile_layer",
    "loss_mobile_total",
    "loss_output",
    "loss_soft_mlm",
    "loss_tiny_total",
    "needs_projections",
    "resolve_layer_map",
    "teacher_layer_for",
    "uniform_layer_map",
    "validate_plan",
]
