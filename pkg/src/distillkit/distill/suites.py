"""Combined objectives of the four distillation suites."""

from __future__ import annotations

import logging
from collections.abc import Callable

from distillkit.corpus.models import MaskedBatch
from distillkit.distill.layer_map import resolve_layer_map
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
from distillkit.distill.models import DistillPlan, DistillProjections, DistillSuite, LossBreakdown
from distillkit.encoder.models import EncoderConfig, EncoderOutputs
from distillkit.errors import IncompatiblePlanError
from distillkit.numerics import Tensor

logger = logging.getLogger(__name__)

Terms = tuple[Tensor, dict[str, Tensor]]


def _require_suite(plan: DistillPlan, suite: DistillSuite) -> None:
    if plan.suite is not suite:
        raise IncompatiblePlanError(f"plan is for suite {plan.suite.value!r}, not {suite.value!r}")


def _projections(projections: DistillProjections | None) -> DistillProjections:
    return projections if projections is not None else DistillProjections()


def _triple_terms(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None,
) -> Terms:
    mlm = loss_mlm(student_out, batch, sum_masked=plan.sum_masked)
    soft = loss_soft_mlm(student_out, teacher_out, batch, plan.temperature, plan.sum_masked)
    align = loss_align(student_out, teacher_out, batch, w_h=_projections(projections).w_h)
    total = combine_distil_triple(mlm, soft, align, plan.resolved_alphas())
    return total, {"mlm": mlm, "soft_mlm": soft, "align": align}


def _tiny_terms(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None,
) -> Terms:
    student_out.require_full()
    teacher_out.require_full()
    proj = _projections(projections)
    layer_map = resolve_layer_map(plan, student_out.num_layers, teacher_out.num_layers)
    embed = loss_embed(
        student_out.hidden_states[0], teacher_out.hidden_states[0], proj.w_e, student_out.attention_mask
    )
    layers = [
        loss_layer(student_out, teacher_out, layer_map, layer, proj.w_h)
        for layer in range(1, student_out.num_layers + 1)
    ]
    output = loss_output(student_out, teacher_out)
    total = combine_tiny(embed, layers, output, plan.resolved_lambdas(student_out.num_layers))
    terms = {"embed": embed, "output": output}
    terms.update({f"layer_{i}": term for i, term in enumerate(layers, start=1)})
    return total, terms


def _compact_terms(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None,
) -> Terms:
    student_out.require_full()
    teacher_out.require_full()
    layer_map = resolve_layer_map(plan, student_out.num_layers, teacher_out.num_layers)
    mlm = loss_mlm(student_out, batch, sum_masked=plan.sum_masked)
    soft = loss_soft_mlm(student_out, teacher_out, batch, plan.temperature, plan.sum_masked)
    layers = [
        loss_compact_layer(student_out, teacher_out, layer_map, layer, plan.swap_attention_kl)
        for layer in range(1, student_out.num_layers + 1)
    ]
    total = combine_compact(mlm, soft, layers, plan.resolved_alphas())
    terms = {"mlm": mlm, "soft_mlm": soft}
    terms.update({f"layer_{i}": term for i, term in enumerate(layers, start=1)})
    return total, terms


def _mobile_terms(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None,
) -> Terms:
    mlm = loss_mlm(student_out, batch, sum_masked=plan.sum_masked)
    student_out.require_full()
    layers = [
        loss_mobile_layer(student_out, teacher_out, layer, plan.swap_attention_kl)
        for layer in range(1, student_out.num_layers + 1)
    ]
    total = combine_mobile(mlm, layers, plan.alpha)
    terms = {"mlm": mlm}
    terms.update({f"layer_{i}": term for i, term in enumerate(layers, start=1)})
    return total, terms


_SUITES: dict[DistillSuite, Callable[..., Terms]] = {
    DistillSuite.DISTIL_TRIPLE: _triple_terms,
    DistillSuite.TINY_LAYERWISE: _tiny_terms,
    DistillSuite.COMPACT_HYBRID: _compact_terms,
    DistillSuite.MOBILE_LAYERWISE: _mobile_terms,
}


def loss_distil_triple(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None = None,
) -> Tensor:
    """``a1 * L_mlm + a2 * L_soft + a3 * L_align``."""
    _require_suite(plan, DistillSuite.DISTIL_TRIPLE)
    return _triple_terms(student_out, teacher_out, batch, plan, projections)[0]


def loss_tiny_total(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None = None,
) -> Tensor:
    """Lambda-weighted embedding, per-layer and output losses."""
    _require_suite(plan, DistillSuite.TINY_LAYERWISE)
    return _tiny_terms(student_out, teacher_out, batch, plan, projections)[0]


def loss_compact_total(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    plan: DistillPlan,
    projections: DistillProjections | None = None,
) -> Tensor:
    """``a1 * L_mlm + a2 * L_soft + a3 * sum_l L_compact(l)``."""
    _require_suite(plan, DistillSuite.COMPACT_HYBRID)
    return _compact_terms(student_out, teacher_out, batch, plan, projections)[0]


def loss_mobile_total(
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    alpha: float,
    swap_attention_kl: bool = False,
    sum_masked: bool = False,
) -> Tensor:
    """``alpha * L_mlm + (1 - alpha) * mean_l L_mobile(l)`` with ``0 < alpha < 1``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    plan = DistillPlan(
        suite=DistillSuite.MOBILE_LAYERWISE,
        alpha=alpha,
        swap_attention_kl=swap_attention_kl,
        sum_masked=sum_masked,
    )
    return _mobile_terms(student_out, teacher_out, batch, plan, None)[0]


def compute_distill_loss(
    plan: DistillPlan,
    student_out: EncoderOutputs,
    teacher_out: EncoderOutputs,
    batch: MaskedBatch,
    projections: DistillProjections | None = None,
) -> LossBreakdown:
    """Evaluate the plan's suite and report every component."""
    total, terms = _SUITES[plan.suite](student_out, teacher_out, batch, plan, projections)
    return LossBreakdown(total=total, components={name: term.item() for name, term in terms.items()})


# -------------------------------------------------------------------- plans


def validate_plan(plan: DistillPlan, student: EncoderConfig, teacher: EncoderConfig) -> DistillPlan:
    """Check that ``plan`` fits the student/teacher pair.

    Raises:
        IncompatiblePlanError: Depth, width, head-count, vocabulary or weight
            count requirements of the suite are not met.
    """
    if student.vocab_size != teacher.vocab_size:
        raise IncompatiblePlanError(
            f"student and teacher vocabularies differ ({student.vocab_size} vs {teacher.vocab_size})"
        )
    if student.num_layers > teacher.num_layers:
        raise IncompatiblePlanError(
            f"student has more layers ({student.num_layers}) than the teacher ({teacher.num_layers})"
        )
    same_width = student.hidden_dim == teacher.hidden_dim
    suite = plan.suite
    if suite is DistillSuite.MOBILE_LAYERWISE:
        if student.num_layers != teacher.num_layers or not same_width:
            raise IncompatiblePlanError(
                "mobile_layerwise needs a teacher with the student's depth and hidden size "
                f"(student {student.num_layers}L/{student.hidden_dim}D, "
                f"teacher {teacher.num_layers}L/{teacher.hidden_dim}D)"
            )
    if suite is DistillSuite.COMPACT_HYBRID and not same_width:
        raise IncompatiblePlanError("compact_hybrid needs equal student and teacher hidden sizes")
    if suite in (DistillSuite.TINY_LAYERWISE, DistillSuite.COMPACT_HYBRID, DistillSuite.MOBILE_LAYERWISE):
        if student.num_heads != teacher.num_heads:
            raise IncompatiblePlanError(
                f"{suite.value} aligns attention per head; student has {student.num_heads} heads, "
                f"teacher {teacher.num_heads}"
            )
    if suite is DistillSuite.TINY_LAYERWISE and plan.lambdas is not None:
        if len(plan.lambdas) != student.num_layers + 2:
            raise IncompatiblePlanError(
                f"tiny_layerwise needs {student.num_layers + 2} lambdas, got {len(plan.lambdas)}"
            )
    if plan.layer_map is not None:
        resolve_layer_map(plan, student.num_layers, teacher.num_layers)
    return plan


def default_plan(
    suite: DistillSuite | str, student: EncoderConfig, teacher: EncoderConfig, **overrides: object
) -> DistillPlan:
    """Plan with the suite's published weights, validated against the pair."""
    plan = DistillPlan.model_validate({"suite": DistillSuite(suite), **overrides})
    logger.debug(f"Default {plan.suite.value} plan: alphas={plan.resolved_alphas()}")
    return validate_plan(plan, student, teacher)


def needs_projections(student: EncoderConfig, teacher: EncoderConfig) -> bool:
    return student.hidden_dim != teacher.hidden_dim
