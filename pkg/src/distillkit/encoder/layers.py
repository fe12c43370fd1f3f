"""Building blocks shared by the standard and bottleneck encoders."""

from __future__ import annotations

import math
from typing import Any, Protocol

import numpy as np
from numpy.typing import NDArray

from distillkit.encoder.models import CaptureMode, EncoderConfig, EncoderOutputs, ModelState
from distillkit.errors import ShapeMismatchError
from distillkit.numerics import Tensor, gelu, layer_norm, linear, matmul, softmax, transpose
from distillkit.numerics.functional import dropout

# Added to attention scores at padded key positions; exp() of it is exactly 0.
MASK_BIAS = -1e9


class EncoderInput(Protocol):
    """Anything carrying token ids and a padding mask (e.g. ``MaskedBatch``)."""

    @property
    def input_ids(self) -> NDArray[np.int64]: ...

    @property
    def attention_mask(self) -> NDArray[np.int64]: ...


def check_inputs(config: EncoderConfig, batch: EncoderInput) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    ids = np.asarray(batch.input_ids, dtype=np.int64)
    mask = np.asarray(batch.attention_mask, dtype=np.int64)
    if ids.ndim != 2:
        raise ShapeMismatchError(f"input_ids must be [batch, N], got shape {ids.shape}")
    if mask.shape != ids.shape:
        raise ShapeMismatchError(f"attention_mask shape {mask.shape} != input_ids shape {ids.shape}")
    if ids.shape[1] > config.max_position:
        raise ValueError(
            f"sequence length {ids.shape[1]} exceeds max_position {config.max_position}"
        )
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError(
            f"token ids must lie in [0, {config.vocab_size}), got [{ids.min()}, {ids.max()}]"
        )
    return ids, mask


class AttentionContext:
    """Per-batch constants used by every attention layer."""

    def __init__(self, attention_mask: NDArray[np.int64], dtype: Any) -> None:
        batch, length = attention_mask.shape
        real = attention_mask.astype(dtype)
        self.key_bias = ((1.0 - real) * MASK_BIAS).reshape(batch, 1, 1, length)
        self.query_mask = real.reshape(batch, 1, length, 1)


def _split_heads(x: Tensor, num_heads: int) -> Tensor:
    batch, length, width = x.shape
    return transpose(x.reshape(batch, length, num_heads, width // num_heads), (0, 2, 1, 3))


def multi_head_attention(
    state: ModelState,
    prefix: str,
    query_in: Tensor,
    key_in: Tensor,
    value_in: Tensor,
    ctx: AttentionContext,
) -> tuple[Tensor, Tensor]:
    """Scaled dot-product attention; returns (projected output, probabilities).

    Probabilities are ``[B, H, N, N]``; padded keys get zero weight and rows of
    padded queries are zero.
    """
    p = state.params
    heads = state.config.num_heads
    q = _split_heads(linear(query_in, p[f"{prefix}query.weight"], p[f"{prefix}query.bias"]), heads)
    k = _split_heads(linear(key_in, p[f"{prefix}key.weight"], p[f"{prefix}key.bias"]), heads)
    v = _split_heads(linear(value_in, p[f"{prefix}value.weight"], p[f"{prefix}value.bias"]), heads)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = matmul(q, transpose(k, (0, 1, 3, 2))) * scale + ctx.key_bias
    probs = softmax(scores, axis=-1) * ctx.query_mask
    context = matmul(probs, v)
    batch, _, length, _ = context.shape
    merged = transpose(context, (0, 2, 1, 3)).reshape(batch, length, -1)
    out = linear(merged, p[f"{prefix}output.weight"], p[f"{prefix}output.bias"])
    return out, probs


def feed_forward(state: ModelState, prefix: str, x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    """``LN(x + W_out gelu(W_in x))`` with hidden dropout before the residual."""
    p = state.params
    inner = gelu(linear(x, p[f"{prefix}in.weight"], p[f"{prefix}in.bias"]))
    out = dropout(linear(inner, p[f"{prefix}out.weight"], p[f"{prefix}out.bias"]), rate, rng)
    return layer_norm(x + out, p[f"{prefix}ln.gamma"], p[f"{prefix}ln.beta"])


def mlm_head(state: ModelState, hidden: Tensor) -> Tensor:
    """Transform, GELU, layer-norm, then the (tied) vocabulary decoder."""
    p = state.params
    h = gelu(linear(hidden, p["mlm.transform.weight"], p["mlm.transform.bias"]))
    h = layer_norm(h, p["mlm.ln.gamma"], p["mlm.ln.beta"])
    if state.config.tie_mlm_decoder:
        decoder = transpose(p["embeddings.token"], (1, 0))
    else:
        decoder = p["mlm.decoder.weight"]
    return matmul(h, decoder) + p["mlm.bias"]


def assemble_outputs(
    state: ModelState,
    last: Tensor,
    mask: NDArray[np.int64],
    hidden_states: list[Tensor],
    attentions: list[Tensor],
    capture: CaptureMode,
) -> EncoderOutputs:
    full = capture is CaptureMode.FULL
    return EncoderOutputs(
        last_hidden=last,
        attention_mask=mask,
        hidden_states=hidden_states if full else [],
        attentions=attentions if full else [],
        mlm_logits=None if capture is CaptureMode.BACKBONE else mlm_head(state, last),
    )
