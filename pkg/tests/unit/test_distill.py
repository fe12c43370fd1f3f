"""Unit tests for the distillation module."""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from distillkit.corpus import MaskedBatch
from distillkit.distill import (
    DistillPlan,
    DistillProjections,
    DistillSuite,
    LayerMap,
    combine_compact,
    combine_distil_triple,
    combine_mobile,
    combine_tiny,
    compute_distill_loss,
    default_plan,
    init_student_from_teacher,
    loss_align,
    loss_compact_layer,
    loss_compact_total,
    loss_distil_triple,
    loss_embed,
    loss_layer,
    loss_mlm,
    loss_mobile_layer,
    loss_mobile_total,
    loss_output,
    loss_soft_mlm,
    loss_tiny_total,
    needs_projections,
    resolve_layer_map,
    teacher_layer_for,
    uniform_layer_map,
    validate_plan,
)
from distillkit.encoder import CaptureMode, EncoderOutputs, forward, init_model_state
from distillkit.errors import EmptyMaskWarning, IncompatiblePlanError, ShapeMismatchError
from distillkit.numerics import Tensor, grad_check, no_grad

pytestmark = pytest.mark.unit

LN2 = math.log(2.0)


def _outputs(hidden=None, attention=None, logits=None, mask=None) -> EncoderOutputs:
    """Hand-built one-layer outputs; hidden is [B, N, D], attention [B, H, N, N]."""
    hidden = np.zeros((1, 2, 2)) if hidden is None else np.asarray(hidden, dtype=float)
    states = [Tensor(hidden.copy()), Tensor(hidden.copy())]
    return EncoderOutputs(
        last_hidden=states[-1],
        attention_mask=np.ones(hidden.shape[:2], dtype=np.int64) if mask is None else np.asarray(mask),
        hidden_states=states,
        attentions=[Tensor(np.asarray(attention, dtype=float))] if attention is not None else [],
        mlm_logits=Tensor(np.asarray(logits, dtype=float)) if logits is not None else None,
    )


def _one_masked(label=0) -> MaskedBatch:
    return MaskedBatch(
        input_ids=np.array([[4]]),
        labels=np.array([[label]]),
        mask_indicator=np.array([[1]]),
        attention_mask=np.array([[1]]),
    )


UNIFORM_ROWS = [[[[0.5, 0.5], [0.5, 0.5]]]]
ONE_HOT_ROWS = [[[[1.0, 0.0], [1.0, 0.0]]]]
DISTINCT = [[[1.0, 0.0], [0.0, 1.0]]]


class TestLayerMap:
    """Test student-to-teacher layer maps."""

    @pytest.mark.parametrize(
        ("m", "n", "interior"),
        [(6, 12, (2, 4, 6, 8, 10, 12)), (4, 12, (3, 6, 9, 12)), (3, 4, (2, 3, 4)), (5, 12, (3, 5, 8, 10, 12)),
         (2, 2, (1, 2))],
    )
    def test_uniform_examples(self, m, n, interior):
        """Uniform maps for common depth pairs."""
        layer_map = uniform_layer_map(m, n)
        assert layer_map.targets == (0, *interior, n + 1)
        assert layer_map(m + 1) == n + 1

    def test_uniform_maps_are_valid(self):
        """Every pair M <= N <= 48 gives a valid map ending at N."""
        for n in range(1, 49):
            for m in range(1, n + 1):
                layer_map = uniform_layer_map(m, n)
                assert layer_map.targets[m] == n
                assert len(set(layer_map.targets)) == m + 2

    @pytest.mark.parametrize(("m", "n"), [(0, 4), (5, 4)])
    def test_uniform_rejects_bad_depths(self, m, n):
        """Empty or deeper-than-teacher students are rejected."""
        with pytest.raises(ValueError):
            uniform_layer_map(m, n)

    def test_map_validation(self):
        """Maps must be strictly increasing and anchored."""
        with pytest.raises(ValueError, match="increasing"):
            LayerMap(2, 4, (0, 3, 3, 5))
        with pytest.raises(ValueError):
            LayerMap(2, 4, (1, 2, 3, 5))
        with pytest.raises(IndexError):
            uniform_layer_map(2, 4)(4)

    def test_explicit_plan_map(self):
        """A plan's explicit map is used when present and checked."""
        assert resolve_layer_map(DistillPlan(layer_map=[1, 4]), 2, 4).targets == (0, 1, 4, 5)
        with pytest.raises(IncompatiblePlanError):
            resolve_layer_map(DistillPlan(layer_map=[1, 2, 3]), 2, 4)
        with pytest.raises(IncompatiblePlanError):
            resolve_layer_map(DistillPlan(layer_map=[3, 2]), 2, 4)


class TestOutputLosses:
    """Test MLM, soft MLM, output and alignment losses on hand-built values."""

    def test_mlm_uniform_logits(self):
        """Uniform two-way logits give ln 2."""
        value = loss_mlm(_outputs(logits=[[[0.0, 0.0]]]), _one_masked()).item()
        assert value == pytest.approx(LN2)

    def test_mlm_sum_masked(self, toy_state, toy_batch):
        """sum_masked sums over masked tokens instead of averaging."""
        out = forward(toy_state, toy_batch, CaptureMode.LOGITS_ONLY)
        mean = loss_mlm(out, toy_batch).item()
        total = loss_mlm(out, toy_batch, sum_masked=True).item()
        assert total == pytest.approx(mean * toy_batch.num_masked)

    def test_mlm_empty_mask_warns(self):
        """No masked tokens gives 0 and an EmptyMaskWarning."""
        batch = MaskedBatch(np.array([[5]]), np.array([[-100]]), np.array([[0]]), np.array([[1]]))
        with pytest.warns(EmptyMaskWarning):
            assert loss_mlm(_outputs(logits=[[[0.0, 1.0]]]), batch).item() == 0.0

    def test_soft_mlm_point_mass_teacher(self):
        """A confident teacher against a uniform student gives ln 2."""
        student = _outputs(logits=[[[0.0, 0.0]]])
        teacher = _outputs(logits=[[[50.0, -50.0]]])
        assert loss_soft_mlm(student, teacher, _one_masked()).item() == pytest.approx(LN2)

    def test_soft_mlm_vocab_mismatch(self):
        """Student and teacher must share a vocabulary."""
        with pytest.raises(ShapeMismatchError):
            loss_soft_mlm(_outputs(logits=[[[0.0, 0.0]]]), _outputs(logits=[[[0.0, 0.0, 0.0]]]), _one_masked())

    def test_soft_mlm_temperature(self):
        """Temperature must be positive."""
        out = _outputs(logits=[[[0.0, 0.0]]])
        with pytest.raises(ValueError):
            loss_soft_mlm(out, out, _one_masked(), temperature=0.0)

    def test_output_loss(self):
        """Cross entropy against a point-mass teacher is ln 2 for a uniform student."""
        student = _outputs(logits=[[[0.0, 0.0]]], hidden=np.zeros((1, 1, 2)))
        teacher = _outputs(logits=[[[50.0, -50.0]]], hidden=np.zeros((1, 1, 2)))
        assert loss_output(student, teacher).item() == pytest.approx(LN2)

    @pytest.mark.parametrize(("student", "expected"), [([1.0, 0.0], 0.0), ([0.0, 1.0], 1.0), ([-1.0, 0.0], 2.0)])
    def test_align(self, student, expected):
        """Aligned, orthogonal and opposite final states give 0, 1 and 2."""
        s = _outputs(hidden=[[student]])
        t = _outputs(hidden=[[[1.0, 0.0]]])
        assert loss_align(s, t).item() == pytest.approx(expected)

    def test_align_ignores_padding(self):
        """Padded positions do not count towards the mean."""
        s = _outputs(hidden=[[[1.0, 0.0], [-1.0, 0.0]]], mask=[[1, 0]])
        t = _outputs(hidden=[[[1.0, 0.0], [1.0, 0.0]]])
        assert loss_align(s, t).item() == pytest.approx(0.0)

    def test_align_width_mismatch(self):
        """Different widths need a projection."""
        with pytest.raises(ShapeMismatchError, match="W_h"):
            loss_align(_outputs(hidden=[[[1.0, 0.0]]]), _outputs(hidden=[[[1.0, 0.0, 0.0]]]))

    def test_align_with_projection(self):
        """A projection maps the student into the teacher's width."""
        s = _outputs(hidden=[[[1.0, 0.0]]])
        t = _outputs(hidden=[[[0.0, 0.0, 2.0]]])
        w_h = Tensor(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
        assert loss_align(s, t, w_h=w_h).item() == pytest.approx(0.0)


class TestLayerLosses:
    """Test embedding and per-layer losses on hand-built values."""

    def test_embed_mse(self):
        """Embedding loss is the mean squared difference."""
        e_s = Tensor(np.zeros((1, 2, 2)))
        e_t = Tensor(np.full((1, 2, 2), 2.0))
        assert loss_embed(e_s, e_t).item() == pytest.approx(4.0)

    def test_embed_mask(self):
        """With a mask only real positions count."""
        e_s = Tensor(np.zeros((1, 2, 2)))
        e_t = Tensor(np.array([[[1.0, 1.0], [9.0, 9.0]]]))
        assert loss_embed(e_s, e_t, mask=np.array([[1, 0]])).item() == pytest.approx(1.0)

    def test_layer_attention_mse(self):
        """Equal hidden states leave only the attention MSE of 0.25."""
        s = _outputs(attention=UNIFORM_ROWS)
        t = _outputs(attention=ONE_HOT_ROWS)
        layer_map = LayerMap.from_interior([1], 1)
        assert loss_layer(s, t, layer_map, 1).item() == pytest.approx(0.25)

    def test_layer_attention_skips_padded_queries(self):
        """Padded query rows neither add error nor dilute the mean."""
        s = _outputs(attention=[[[[0.5, 0.5], [9.0, -9.0]]]], mask=[[1, 0]])
        t = _outputs(attention=[[[[1.0, 0.0], [0.0, 0.0]]]], mask=[[1, 0]])
        layer_map = LayerMap.from_interior([1], 1)
        assert loss_layer(s, t, layer_map, 1).item() == pytest.approx(0.25)

    def test_compact_layer_kl(self):
        """Teacher-first attention KL of one-hot against uniform rows is ln 2."""
        s = _outputs(hidden=DISTINCT, attention=UNIFORM_ROWS)
        t = _outputs(hidden=DISTINCT, attention=ONE_HOT_ROWS)
        layer_map = LayerMap.from_interior([1], 1)
        value = loss_compact_layer(s, t, layer_map, 1, swap_attention_kl=True).item()
        assert value == pytest.approx(LN2)

    def test_mobile_layer_sums_positions(self):
        """Mobile attention KL is summed over positions: 2 ln 2 for two rows."""
        s = _outputs(attention=UNIFORM_ROWS)
        t = _outputs(attention=ONE_HOT_ROWS)
        assert loss_mobile_layer(s, t, 1, swap_attention_kl=True).item() == pytest.approx(2 * LN2)

    def test_student_first_kl_is_default(self):
        """Without swap the student distribution comes first."""
        s = _outputs(attention=ONE_HOT_ROWS)
        t = _outputs(attention=UNIFORM_ROWS)
        assert loss_mobile_layer(s, t, 1).item() == pytest.approx(2 * LN2)

    def test_layer_requires_full_capture(self, toy_state, teacher_state, toy_batch):
        """Layer losses refuse outputs without hidden states."""
        s = forward(toy_state, toy_batch, CaptureMode.LOGITS_ONLY)
        t = forward(teacher_state, toy_batch)
        with pytest.raises(ValueError, match="FULL"):
            loss_layer(s, t, uniform_layer_map(2, 4), 1)

    def test_head_count_mismatch(self, config_factory, toy_batch, teacher_state):
        """Attention alignment needs equal head counts."""
        student = init_model_state(config_factory(num_heads=4), seed=0)
        s = forward(student, toy_batch)
        t = forward(teacher_state, toy_batch)
        with pytest.raises(IncompatiblePlanError):
            loss_compact_layer(s, t, uniform_layer_map(2, 4), 1)

    def test_mobile_depth_mismatch(self, toy_state, teacher_state, toy_batch):
        """Mobile losses need equal depth."""
        with pytest.raises(IncompatiblePlanError):
            loss_mobile_layer(forward(toy_state, toy_batch), forward(teacher_state, toy_batch), 1)

    def test_head_permutation_invariance(self, toy_state, teacher_state, toy_batch):
        """Permuting heads on both sides leaves attention losses unchanged."""
        s = forward(toy_state, toy_batch)
        t = forward(teacher_state, toy_batch)
        layer_map = uniform_layer_map(2, 4)
        perm = [1, 0]

        def permuted(out):
            return EncoderOutputs(
                last_hidden=out.last_hidden,
                attention_mask=out.attention_mask,
                hidden_states=out.hidden_states,
                attentions=[Tensor(a.data[:, perm]) for a in out.attentions],
                mlm_logits=out.mlm_logits,
            )

        for loss in (loss_layer, loss_compact_layer):
            original = loss(s, t, layer_map, 2).item()
            assert loss(permuted(s), permuted(t), layer_map, 2).item() == pytest.approx(original)


class TestCombiners:
    """Test the weighted combinations of each suite."""

    def test_distil_triple(self):
        """2 * 0.5 + 5 * 0.2 + 1 * 0.1 = 2.1."""
        assert combine_distil_triple(0.5, 0.2, 0.1, (2.0, 5.0, 1.0)) == pytest.approx(2.1)

    def test_tiny(self):
        """Unit lambdas sum the terms."""
        assert combine_tiny(0.1, [0.2, 0.3], 0.4, [1.0] * 4) == pytest.approx(1.0)

    def test_tiny_lambda_count(self):
        """The lambda count must be M + 2."""
        with pytest.raises(IncompatiblePlanError):
            combine_tiny(0.1, [0.2, 0.3], 0.4, [1.0] * 3)

    def test_compact(self):
        """1 * 0.4 + 5 * 0.1 + 3 * (0.2 + 0.1) = 1.8."""
        assert combine_compact(0.4, 0.1, [0.2, 0.1], (1.0, 5.0, 3.0)) == pytest.approx(1.8)

    def test_mobile(self):
        """0.5 * 2 + 0.5 * mean(3, 5) = 3."""
        assert combine_mobile(2.0, [3.0, 5.0], 0.5) == pytest.approx(3.0)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_mobile_alpha_range(self, alpha):
        """alpha must lie strictly inside (0, 1)."""
        with pytest.raises(ValueError):
            combine_mobile(2.0, [3.0], alpha)

    def test_mobile_needs_layers(self):
        """The mobile combination needs at least one layer term."""
        with pytest.raises(ValueError):
            combine_mobile(2.0, [], 0.5)


class TestSuites:
    """Test suite totals, plans and the degenerate identical student."""

    @pytest.fixture
    def identical(self, teacher_state, toy_batch):
        """Outputs of a teacher compared with itself."""
        out = forward(teacher_state, toy_batch)
        return out, forward(teacher_state, toy_batch)

    def test_identical_student_has_zero_alignment(self, identical, toy_batch):
        """A student identical to its teacher has zero alignment and layer losses."""
        s, t = identical
        layer_map = uniform_layer_map(4, 4)
        assert loss_align(s, t).item() == pytest.approx(0.0, abs=1e-12)
        assert loss_soft_mlm(s, t, toy_batch).item() == pytest.approx(0.0, abs=1e-12)
        for layer in range(1, 5):
            assert loss_layer(s, t, layer_map, layer).item() == pytest.approx(0.0, abs=1e-12)
            assert loss_compact_layer(s, t, layer_map, layer).item() == pytest.approx(0.0, abs=1e-9)
            assert loss_mobile_layer(s, t, layer).item() == pytest.approx(0.0, abs=1e-9)
        assert loss_embed(s.hidden_states[0], t.hidden_states[0]).item() == pytest.approx(0.0, abs=1e-12)

    def test_identical_student_output_is_teacher_entropy(self, identical):
        """Against itself the output loss is the mean teacher entropy over real positions."""
        s, t = identical
        logits = t.require_logits().data
        entropy = -(special.softmax(logits, axis=-1) * special.log_softmax(logits, axis=-1)).sum(axis=-1)
        real = t.attention_mask.astype(bool)
        assert loss_output(s, t).item() == pytest.approx(entropy[real].mean(), abs=1e-8)

    def test_plan_defaults(self):
        """Suites carry their published weights."""
        assert DistillPlan().resolved_alphas() == (2.0, 5.0, 1.0)
        assert DistillPlan(suite="compact_hybrid").resolved_alphas() == (1.0, 5.0, 3.0)
        assert DistillPlan(suite="mobile_layerwise").alpha == 0.5
        assert DistillPlan(suite="tiny_layerwise").resolved_lambdas(3) == [1.0] * 5

    def test_plan_validation(self):
        """Negative weights and out-of-range alpha are rejected."""
        with pytest.raises(ValidationError):
            DistillPlan(alphas=(1.0, -1.0, 1.0))
        with pytest.raises(ValidationError):
            DistillPlan(alpha=1.0)
        with pytest.raises(ValidationError):
            DistillPlan(unknown=1)

    def test_suite_totals_match_breakdown(self, toy_state, teacher_state, toy_batch):
        """Each suite total equals compute_distill_loss for the same plan."""
        s = forward(toy_state, toy_batch)
        t = forward(teacher_state, toy_batch)
        for suite, total_fn in (
            (DistillSuite.DISTIL_TRIPLE, loss_distil_triple),
            (DistillSuite.TINY_LAYERWISE, loss_tiny_total),
            (DistillSuite.COMPACT_HYBRID, loss_compact_total),
        ):
            plan = DistillPlan(suite=suite)
            breakdown = compute_distill_loss(plan, s, t, toy_batch)
            assert total_fn(s, t, toy_batch, plan).item() == pytest.approx(breakdown.total.item())
        tiny = compute_distill_loss(DistillPlan(suite="tiny_layerwise"), s, t, toy_batch)
        assert set(tiny.components) == {"embed", "layer_1", "layer_2", "output"}
        assert tiny.as_dict()["loss"] == pytest.approx(sum(tiny.components.values()))

    def test_wrong_suite_rejected(self, toy_state, teacher_state, toy_batch):
        """Suite totals refuse plans for other suites."""
        s = forward(toy_state, toy_batch)
        t = forward(teacher_state, toy_batch)
        with pytest.raises(IncompatiblePlanError):
            loss_tiny_total(s, t, toy_batch, DistillPlan())

    def test_mobile_total(self, config_factory, toy_batch):
        """The mobile total combines MLM and the mean layer term."""
        student = init_model_state(config_factory(), seed=1)
        teacher = init_model_state(config_factory(), seed=2)
        s, t = forward(student, toy_batch), forward(teacher, toy_batch)
        total = loss_mobile_total(s, t, toy_batch, alpha=0.25).item()
        mlm = loss_mlm(s, toy_batch).item()
        layers = [loss_mobile_layer(s, t, layer).item() for layer in (1, 2)]
        assert total == pytest.approx(0.25 * mlm + 0.75 * sum(layers) / 2)
        with pytest.raises(ValueError):
            loss_mobile_total(s, t, toy_batch, alpha=1.0)

    def test_validate_plan(self, config_factory):
        """Plans are checked against the pair's shapes."""
        student, teacher = config_factory(), config_factory(num_layers=4)
        assert validate_plan(DistillPlan(), student, teacher).suite is DistillSuite.DISTIL_TRIPLE
        with pytest.raises(IncompatiblePlanError, match="mobile"):
            validate_plan(DistillPlan(suite="mobile_layerwise"), student, teacher)
        with pytest.raises(IncompatiblePlanError, match="lambdas"):
            validate_plan(DistillPlan(suite="tiny_layerwise", lambdas=[1.0, 1.0]), student, teacher)
        with pytest.raises(IncompatiblePlanError, match="hidden"):
            validate_plan(DistillPlan(suite="compact_hybrid"), config_factory(hidden_dim=4), teacher)
        with pytest.raises(IncompatiblePlanError, match="vocabularies"):
            validate_plan(DistillPlan(), config_factory(vocab_size=20), teacher)
        with pytest.raises(IncompatiblePlanError):
            validate_plan(DistillPlan(), teacher, student)

    def test_default_plan(self, config_factory):
        """default_plan validates and applies overrides."""
        plan = default_plan("compact_hybrid", config_factory(), config_factory(num_layers=4), temperature=2.0)
        assert plan.temperature == 2.0
        assert not needs_projections(config_factory(), config_factory(num_layers=4))
        assert needs_projections(config_factory(hidden_dim=4), config_factory())


class TestGradients:
    """Gradient checks of every loss through the student encoder."""

    @pytest.fixture
    def teacher_out(self, teacher_state, toy_batch):
        with no_grad():
            return forward(teacher_state, toy_batch)

    @pytest.mark.parametrize(
        "loss",
        [
            lambda s, t, b: loss_mlm(s, b),
            lambda s, t, b: loss_soft_mlm(s, t, b, temperature=2.0),
            lambda s, t, b: loss_output(s, t),
            lambda s, t, b: loss_align(s, t, b),
            lambda s, t, b: loss_embed(s.hidden_states[0], t.hidden_states[0], mask=b.attention_mask),
            lambda s, t, b: loss_layer(s, t, uniform_layer_map(2, 4), 2),
            lambda s, t, b: loss_compact_layer(s, t, uniform_layer_map(2, 4), 1),
            lambda s, t, b: loss_compact_layer(s, t, uniform_layer_map(2, 4), 2, swap_attention_kl=True),
        ],
    )
    def test_loss_gradients(self, loss, toy_state, teacher_out, toy_batch):
        """Analytic gradients agree with central differences."""
        report = grad_check(lambda: loss(forward(toy_state, toy_batch), teacher_out, toy_batch),
                            toy_state.backbone_parameters())
        assert report.passed(), report

    def test_mobile_gradients(self, config_factory, toy_batch):
        """The mobile layer loss passes the gradient check."""
        student = init_model_state(config_factory(), seed=1)
        with no_grad():
            teacher_out = forward(init_model_state(config_factory(), seed=2), toy_batch)
        report = grad_check(lambda: loss_mobile_layer(forward(student, toy_batch), teacher_out, 1),
                            student.backbone_parameters())
        assert report.passed(), report

    def test_projection_gradients(self, config_factory, teacher_state, toy_batch):
        """Projection matrices receive correct gradients."""
        student = init_model_state(config_factory(hidden_dim=4), seed=3)
        projections = DistillProjections.for_pair(student.config, teacher_state.config, seed=0)
        with no_grad():
            teacher_out = forward(teacher_state, toy_batch)
        plan = DistillPlan(suite="tiny_layerwise")

        def loss():
            return loss_tiny_total(forward(student, toy_batch), teacher_out, toy_batch, plan, projections)

        params = {**student.backbone_parameters(), **dict(projections.named_parameters())}
        report = grad_check(loss, params, num_coords=300)
        assert report.passed(), report
        assert {name for name, _ in projections.named_parameters()} == {"proj.w_h", "proj.w_e"}


class TestStudentInit:
    """Test copying teacher weights into a student."""

    def test_every_other_layer(self, teacher_state, toy_config):
        """A half-depth student copies teacher layers 0 and 2."""
        student = init_student_from_teacher(teacher_state, toy_config)
        np.testing.assert_array_equal(student["layers.0.attn.query.weight"].data,
                                      teacher_state["layers.0.attn.query.weight"].data)
        np.testing.assert_array_equal(student["layers.1.ffn.in.weight"].data,
                                      teacher_state["layers.2.ffn.in.weight"].data)
        np.testing.assert_array_equal(student["embeddings.token"].data, teacher_state["embeddings.token"].data)

    def test_copies_are_independent(self, teacher_state, toy_config):
        """Student tensors do not alias the teacher's."""
        student = init_student_from_teacher(teacher_state, toy_config)
        student["embeddings.token"].data[...] = 0.0
        assert teacher_state["embeddings.token"].data.any()

    def test_full_depth_copy(self, teacher_state):
        """A same-depth student reproduces the teacher's outputs."""
        student = init_student_from_teacher(teacher_state, teacher_state.config)
        for name, tensor in teacher_state.named_parameters():
            np.testing.assert_array_equal(student[name].data, tensor.data)

    def test_teacher_layer_for(self):
        """Uniform fallback when the teacher is not exactly twice as deep."""
        assert [teacher_layer_for(s, 2, 4) for s in range(2)] == [0, 2]
        assert [teacher_layer_for(s, 4, 12) for s in range(4)] == [2, 5, 8, 11]

    def test_width_mismatch(self, teacher_state, config_factory):
        """A narrower student cannot copy weights."""
        with pytest.raises(IncompatiblePlanError, match="hidden_dim"):
            init_student_from_teacher(teacher_state, config_factory(hidden_dim=4))

    def test_deeper_student(self, toy_state, config_factory):
        """A student deeper than its teacher is rejected."""
        with pytest.raises(IncompatiblePlanError):
            init_student_from_teacher(toy_state, config_factory(num_layers=3))
