"""Dense tensors with reverse-mode differentiation."""

from distillkit.numerics.functional import (
    conv1d_same,
    cosine_similarity,
    cross_entropy_soft,
    dropout,
    gelu,
    kl_divergence,
    layer_norm,
    linear,
    log_softmax,
    masked_mean,
    mse,
    safe_log,
    softmax,
)
from distillkit.numerics.gradcheck import GradientTape, grad_check, gradient_of, named_parameters
from distillkit.numerics.models import GradCheckReport, Precision
from distillkit.numerics.precision import TRAIN_DTYPE, VERIFY_DTYPE, assert_finite, resolve_dtype
from distillkit.numerics.tensor import (
    Tensor,
    as_tensor,
    concat,
    embedding,
    is_grad_enabled,
    matmul,
    no_grad,
    reshape,
    transpose,
)

__all__ = [
    "TRAIN_DTYPE",
    "VERIFY_DTYPE",
    "GradCheckReport",
    "GradientTape",
    "Precision",
    "Tensor",
    "as_tensor",
    "assert_finite",
    "concat",
    "conv1d_same",
    "cosine_similarity",
    "cross_entropy_soft",
    "dropout",
    "embedding",
    "gelu",
    "grad_check",
    "gradient_of",
    "is_grad_enabled",
    "kl_divergence",
    "layer_norm",
    "linear",
    "log_softmax",
    "masked_mean",
    "matmul",
    "mse",
    "named_parameters",
    "no_grad",
    "reshape",
    "resolve_dtype",
    "safe_log",
    "softmax",
    "transpose",
]
