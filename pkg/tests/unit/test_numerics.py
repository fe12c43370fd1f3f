"""Unit tests for the numerics module."""

import math
import threading

import numpy as np
import pytest

from distillkit.errors import NonFiniteError, ShapeMismatchError
from distillkit.numerics import (
    GradientTape,
    Precision,
    Tensor,
    assert_finite,
    conv1d_same,
    cosine_similarity,
    dropout,
    gelu,
    grad_check,
    is_grad_enabled,
    kl_divergence,
    layer_norm,
    log_softmax,
    masked_mean,
    mse,
    no_grad,
    resolve_dtype,
    softmax,
)

pytestmark = pytest.mark.unit


def _param(shape, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(scale=scale, size=shape), requires_grad=True)


class TestSoftmax:
    """Test softmax and log_softmax."""

    def test_uniform_for_equal_logits(self):
        """Equal logits give a uniform distribution."""
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])).data, [0.5, 0.5])

    def test_large_logits_are_stable(self):
        """Max subtraction keeps huge logits finite."""
        out = softmax(np.array([1000.0, 1000.0])).data
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [0.5, 0.5])

    def test_log_ratio_logits(self):
        """Logits ln1 and ln3 give probabilities 1/4 and 3/4."""
        out = softmax(np.array([math.log(1.0), math.log(3.0)])).data
        np.testing.assert_allclose(out, [0.25, 0.75])

    def test_rows_sum_to_one(self):
        """Softmax along the last axis sums to one per row."""
        x = np.random.default_rng(4).normal(size=(3, 5, 7)) * 10
        np.testing.assert_allclose(softmax(x).data.sum(axis=-1), np.ones((3, 5)))

    def test_log_softmax_matches_log_of_softmax(self):
        """log_softmax agrees with log(softmax)."""
        x = np.random.default_rng(5).normal(size=(4, 6))
        np.testing.assert_allclose(log_softmax(x).data, np.log(softmax(x).data), atol=1e-12)

    def test_invalid_axis_raises(self):
        """An out-of-range axis raises ValueError."""
        with pytest.raises(ValueError):
            softmax(np.zeros((2, 3)), axis=2)


class TestDistances:
    """Test divergences and similarity measures."""

    def test_kl_identical_is_zero(self):
        """KL of a distribution with itself is 0."""
        p = np.array([0.5, 0.5])
        assert kl_divergence(p, p).item() == pytest.approx(0.0, abs=1e-12)

    def test_kl_point_mass_against_uniform(self):
        """KL([1,0] || [0.5,0.5]) is ln 2 and the zero entry contributes nothing."""
        value = kl_divergence(np.array([1.0, 0.0]), np.array([0.5, 0.5])).item()
        assert value == pytest.approx(math.log(2.0), abs=1e-9)

    def test_kl_uniform_against_skewed(self):
        """KL([0.5,0.5] || [0.9,0.1]) is about 0.5108."""
        value = kl_divergence(np.array([0.5, 0.5]), np.array([0.9, 0.1])).item()
        assert value == pytest.approx(0.5108, abs=1e-4)

    def test_kl_shape_mismatch(self):
        """Distributions of different shapes are rejected."""
        with pytest.raises(ShapeMismatchError):
            kl_divergence(np.ones(2) / 2, np.ones(3) / 3)

    @pytest.mark.parametrize(
        ("u", "v", "expected"),
        [([1.0, 0.0], [2.0, 0.0], 1.0), ([1.0, 0.0], [0.0, 3.0], 0.0), ([1.0, 1.0], [-1.0, -1.0], -1.0)],
    )
    def test_cosine_similarity(self, u, v, expected):
        """Parallel, orthogonal and opposite vectors."""
        assert cosine_similarity(np.array(u), np.array(v)).item() == pytest.approx(expected)

    def test_cosine_of_zero_vector_is_finite(self):
        """The norm floor keeps a zero vector from producing NaN."""
        assert cosine_similarity(np.zeros(3), np.ones(3)).item() == 0.0

    @pytest.mark.parametrize(("offset", "expected"), [(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)])
    def test_mse(self, offset, expected):
        """Constant offsets give the squared offset."""
        a = np.arange(6.0).reshape(2, 3)
        assert mse(a, a + offset).item() == pytest.approx(expected)


class TestMaskedMean:
    """Test masked_mean."""

    def test_mean_over_selected(self):
        """Only positions with mask 1 are averaged."""
        values = Tensor(np.array([1.0, 2.0, 3.0, 100.0]))
        assert masked_mean(values, np.array([1, 1, 1, 0])).item() == pytest.approx(2.0)

    def test_empty_mask_is_zero(self):
        """An all-zero mask gives 0, not NaN."""
        values = _param((4,))
        out = masked_mean(values, np.zeros(4))
        assert out.item() == 0.0
        grads = GradientTape({"v": values}).gradient(out)
        np.testing.assert_array_equal(grads["v"], np.zeros(4))


class TestAutodiff:
    """Test the gradient tape and gradient checking."""

    def test_sum_of_squares_gradient(self):
        """d/dθ Σθ² is 2θ."""
        theta = _param((3, 4))
        grads = GradientTape({"theta": theta}).gradient((theta * theta).sum())
        np.testing.assert_allclose(grads["theta"], 2 * theta.data)

    def test_untouched_parameter_gets_zeros(self):
        """Parameters outside the graph receive zero gradients."""
        used, unused = _param((2,)), _param((3,), seed=1)
        grads = GradientTape({"used": used, "unused": unused}).gradient((used * 3.0).sum())
        np.testing.assert_array_equal(grads["unused"], np.zeros(3))

    def test_non_scalar_loss_rejected(self):
        """The tape only differentiates scalars."""
        theta = _param((3,))
        with pytest.raises(ShapeMismatchError):
            GradientTape({"theta": theta}).gradient(theta * 2.0)

    def test_grad_check_sum_of_squares(self):
        """Finite differences agree with the analytic gradient of Σθ²."""
        theta = _param((5,))
        report = grad_check(lambda: (theta * theta).sum(), {"theta": theta})
        assert report.num_checked == 5
        assert report.passed()

    def test_grad_check_detects_wrong_gradient(self):
        """A hand-written wrong backward fails the check."""
        from distillkit.numerics.tensor import _result

        theta = _param((4,))

        def wrong_square(x):
            return _result(x.data**2, (x,), lambda grad: x._accumulate(grad * x.data))

        report = grad_check(lambda: wrong_square(theta).sum(), {"theta": theta})
        assert not report.passed()
        assert report.worst_param == "theta"

    def test_grad_check_samples_coordinates(self):
        """Large parameters are sampled down to num_coords."""
        theta = _param((30, 30))
        report = grad_check(lambda: (theta * theta).mean(), {"theta": theta}, num_coords=50)
        assert report.num_checked == 50

    @pytest.mark.parametrize(
        "build",
        [
            lambda x, w, b: (softmax(x @ w + b) ** 2).sum(),
            lambda x, w, b: log_softmax(x @ w + b).mean(),
            lambda x, w, b: gelu(x @ w + b).sum(),
            lambda x, w, b: layer_norm(x @ w, b, b * 0.5).sum(),
            lambda x, w, b: kl_divergence(softmax(x @ w), softmax(x @ w + b)).sum(),
            lambda x, w, b: cosine_similarity(x @ w, x @ w + b).sum(),
        ],
    )
    def test_grad_check_functions(self, build):
        """Elementwise and reduction functions pass the gradient check."""
        x = _param((3, 4), seed=1)
        w = _param((4, 5), seed=2, scale=0.5)
        b = _param((5,), seed=3)
        report = grad_check(lambda: build(x, w, b), {"x": x, "w": w, "b": b})
        assert report.passed(), report

    def test_grad_check_conv(self):
        """Same-padded 1-D convolution passes the gradient check."""
        x = _param((2, 5, 3), seed=1)
        w = _param((3, 3, 4), seed=2, scale=0.5)
        report = grad_check(lambda: (conv1d_same(x, w) ** 2).sum(), {"x": x, "w": w})
        assert report.passed(), report
        assert conv1d_same(x, w).shape == (2, 5, 4)

    def test_conv_even_kernel_rejected(self):
        """Same padding needs an odd kernel."""
        with pytest.raises(ValueError):
            conv1d_same(_param((1, 4, 2)), _param((2, 2, 2)))

    def test_no_grad_stops_recording(self):
        """Results computed under no_grad do not require gradients."""
        theta = _param((3,))
        with no_grad():
            out = (theta * 2.0).sum()
        assert not out.requires_grad
        assert is_grad_enabled()

    def test_no_grad_is_thread_local(self):
        """no_grad in one thread leaves other threads recording."""
        seen = []
        with no_grad():
            worker = threading.Thread(target=lambda: seen.append(is_grad_enabled()))
            worker.start()
            worker.join()
        assert seen == [True]


class TestDropout:
    """Test inverted dropout."""

    def test_identity_without_generator(self):
        """Without a generator dropout is the identity."""
        x = _param((4, 4))
        assert dropout(x, 0.5, None) is x

    def test_scaling_preserves_expectation(self):
        """Kept units are scaled by 1 / (1 - rate)."""
        x = Tensor(np.ones((200, 200)))
        out = dropout(x, 0.25, np.random.default_rng(0)).data
        np.testing.assert_allclose(out[out != 0.0], 1 / 0.75)
        assert out.mean() == pytest.approx(1.0, abs=0.02)


class TestPrecision:
    """Test precision helpers."""

    def test_resolve_dtype(self):
        """Precision names map to numpy dtypes."""
        assert resolve_dtype("float32") == np.float32
        assert resolve_dtype(Precision.FLOAT64) == np.float64

    def test_unknown_precision(self):
        """Unknown precision names are rejected."""
        with pytest.raises(ValueError):
            resolve_dtype("float16")

    def test_assert_finite(self):
        """NaN and Inf raise NonFiniteError naming the value."""
        assert_finite("ok", np.ones(3))
        with pytest.raises(NonFiniteError, match="loss"):
            assert_finite("loss", np.array([1.0, np.nan]))
