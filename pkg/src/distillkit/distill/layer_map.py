"""Student-to-teacher layer mapping."""

from __future__ import annotations

import math

from distillkit.distill.models import DistillPlan, LayerMap
from distillkit.errors import IncompatiblePlanError


def uniform_layer_map(student_layers: int, teacher_layers: int) -> LayerMap:
    """Uniform-stride map: ``g(l) = l * (N_t // M)`` when M divides N_t, else ``ceil(l * N_t / M)``."""
    m, n = student_layers, teacher_layers
    if m < 1:
        raise ValueError(f"student needs at least one layer, got {m}")
    if m > n:
        raise ValueError(f"student has more layers ({m}) than the teacher ({n})")
    if n % m == 0:
        stride = n // m
        interior = [layer * stride for layer in range(1, m + 1)]
    else:
        interior = [math.ceil(layer * n / m) for layer in range(1, m + 1)]
    return LayerMap.from_interior(interior, n)


def resolve_layer_map(plan: DistillPlan, student_layers: int, teacher_layers: int) -> LayerMap:
    """The plan's explicit map if it has one, the uniform map otherwise."""
    if plan.layer_map is None:
        return uniform_layer_map(student_layers, teacher_layers)
    if len(plan.layer_map) != student_layers:
        raise IncompatiblePlanError(
            f"layer_map has {len(plan.layer_map)} entries but the student has {student_layers} layers"
        )
    try:
        return LayerMap.from_interior(plan.layer_map, teacher_layers)
    except ValueError as exc:
        raise IncompatiblePlanError(str(exc)) from exc
