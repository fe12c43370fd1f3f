"""Differentiable functions built on :mod:`distillkit.numerics.tensor`.

Distributions are clamped to ``[PROB_FLOOR, 1]`` before logarithms and
cosine similarity divides by ``max(|u||v|, NORM_FLOOR)``.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.special import erf

from distillkit.errors import ShapeMismatchError
from distillkit.numerics.tensor import (
    Array,
    Tensor,
    _result,
    as_tensor,
    clip,
    getitem,
    log,
    matmul,
    maximum,
    pad,
)

PROB_FLOOR = 1e-12
NORM_FLOOR = 1e-12
LAYER_NORM_EPS = 1e-12

_SQRT_2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _check_axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} is invalid for a tensor of shape {x.shape}")
    return axis % x.ndim


def _check_same_shape(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


def softmax(x: Any, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtracted) along ``axis``."""
    x = as_tensor(x)
    axis = _check_axis(x, axis)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)

    def backward(grad: Array) -> None:
        x._accumulate(y * (grad - np.sum(grad * y, axis=axis, keepdims=True)))

    return _result(y, (x,), backward)


def log_softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    axis = _check_axis(x, axis)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    out = shifted - lse

    def backward(grad: Array) -> None:
        x._accumulate(grad - np.exp(out) * np.sum(grad, axis=axis, keepdims=True))

    return _result(out, (x,), backward)


def safe_log(p: Tensor) -> Tensor:
    return log(clip(p, PROB_FLOOR, 1.0))


def kl_divergence(p: Any, q: Any, axis: int = -1) -> Tensor:
    """``sum p * ln(p / q)`` along ``axis``.

    Zero entries of ``p`` contribute exactly 0; both arguments are clamped
    inside the logarithm only.
    """
    p, q = as_tensor(p), as_tensor(q)
    _check_same_shape(p, q, "kl_divergence")
    _check_axis(p, axis)
    return (p * (safe_log(p) - safe_log(q))).sum(axis=axis)


def cross_entropy_soft(p: Tensor, log_q: Tensor, axis: int = -1) -> Tensor:
    """``-sum p * log_q`` along ``axis`` (``log_q`` already in log space)."""
    _check_same_shape(p, log_q, "cross_entropy_soft")
    return -(p * log_q).sum(axis=axis)


def cosine_similarity(u: Any, v: Any, axis: int = -1) -> Tensor:
    """``u.v / max(|u| |v|, NORM_FLOOR)`` along ``axis``."""
    u, v = as_tensor(u), as_tensor(v)
    _check_same_shape(u, v, "cosine_similarity")
    _check_axis(u, axis)
    dot = (u * v).sum(axis=axis)
    squared = (u * u).sum(axis=axis) * (v * v).sum(axis=axis)
    return dot / maximum(squared, NORM_FLOOR * NORM_FLOOR) ** 0.5


def mse(a: Any, b: Any) -> Tensor:
    """Mean of squared elementwise differences."""
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "mse")
    diff = a - b
    return (diff * diff).mean()


def gelu(x: Tensor) -> Tensor:
    """Exact (erf) GELU."""
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT_2))
    pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT_2PI

    def backward(grad: Array) -> None:
        x._accumulate(grad * (cdf + x.data * pdf))

    return _result(x.data * cdf, (x,), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Layer normalisation over the last axis."""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std

    def backward(grad: Array) -> None:
        if x.requires_grad:
            g_hat = grad * gamma.data
            x._accumulate(
                inv_std
                * (
                    g_hat
                    - g_hat.mean(axis=-1, keepdims=True)
                    - x_hat * (g_hat * x_hat).mean(axis=-1, keepdims=True)
                )
            )
        gamma._accumulate(grad * x_hat)
        beta._accumulate(grad)

    return _result(x_hat * gamma.data + beta.data, (x, gamma, beta), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = matmul(x, weight)
    return out + bias if bias is not None else out


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when ``rate`` is 0 or no generator is given."""
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep


def conv1d_same(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """1-D convolution over the sequence axis with same padding.

    ``x`` is ``[batch, length, c_in]`` and ``weight`` is
    ``[kernel, c_in, c_out]`` with an odd kernel size.
    """
    kernel = weight.shape[0]
    if kernel % 2 != 1:
        raise ValueError(f"conv1d_same needs an odd kernel size, got {kernel}")
    if weight.shape[1] != x.shape[-1]:
        raise ShapeMismatchError(
            f"conv1d_same: input channels {x.shape[-1]} vs kernel channels {weight.shape[1]}"
        )
    half = kernel // 2
    length = x.shape[1]
    padded = pad(x, [(0, 0), (half, half), (0, 0)])
    taps = [
        matmul(getitem(padded, (slice(None), slice(k, k + length), slice(None))), weight[k])
        for k in range(kernel)
    ]
    out = taps[0]
    for tap in taps[1:]:
        out = out + tap
    return out + bias if bias is not None else out


def masked_mean(values: Tensor, mask: NDArray[Any]) -> Tensor:
    """Mean of ``values`` over positions where ``mask`` is 1 (0 when none are)."""
    weights = np.asarray(mask, dtype=values.dtype)
    total = float(weights.sum())
    if total == 0.0:
        return (values * 0.0).sum()
    return (values * weights).sum() / total
