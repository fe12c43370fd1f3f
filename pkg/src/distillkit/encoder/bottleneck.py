"""Bottleneck (narrow-but-deep) encoder.

Each block projects its input down to ``bottleneck_dim`` twice: once for
the attention/FFN stream and once, shared, for queries and keys. Values are
projected from the full-width input. After attention and
``num_ffn_blocks`` feed-forward sub-blocks the stream is projected back up
and added to the block input.
"""

from __future__ import annotations

import numpy as np

from distillkit.encoder.layers import (
    AttentionContext,
    EncoderInput,
    assemble_outputs,
    check_inputs,
    feed_forward,
    multi_head_attention,
)
from distillkit.encoder.models import CaptureMode, EncoderOutputs, ModelState
from distillkit.numerics import Tensor, conv1d_same, embedding, layer_norm, linear
from distillkit.numerics.functional import dropout


def bottleneck_embed(
    state: ModelState, ids: np.ndarray, rate: float, rng: np.random.Generator | None
) -> Tensor:
    """Narrow token embeddings up-projected by a same-padded 1-D convolution."""
    p = state.params
    length = ids.shape[1]
    tokens = embedding(p["embeddings.token"], ids)
    widened = conv1d_same(tokens, p["embeddings.conv.weight"], p["embeddings.conv.bias"])
    out = layer_norm(
        widened + p["embeddings.position"][:length],
        p["embeddings.ln.gamma"],
        p["embeddings.ln.beta"],
    )
    return dropout(out, rate, rng)


def _project(state: ModelState, prefix: str, x: Tensor) -> Tensor:
    p = state.params
    return layer_norm(
        linear(x, p[f"{prefix}.weight"], p[f"{prefix}.bias"]),
        p[f"{prefix}_ln.gamma"],
        p[f"{prefix}_ln.beta"],
    )


def bottleneck_block(
    state: ModelState,
    layer: int,
    x: Tensor,
    ctx: AttentionContext,
    rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """One bottleneck block; returns (output, attention probabilities)."""
    p = state.params
    prefix = f"layers.{layer}."
    stream = _project(state, f"{prefix}bottleneck.input", x)
    shared = _project(state, f"{prefix}bottleneck.shared", x)
    attended, probs = multi_head_attention(state, f"{prefix}attn.", shared, shared, x, ctx)
    z = layer_norm(
        stream + dropout(attended, rate, rng), p[f"{prefix}attn_ln.gamma"], p[f"{prefix}attn_ln.beta"]
    )
    for j in range(state.config.num_ffn_blocks):
        z = feed_forward(state, f"{prefix}ffn.{j}.", z, rate, rng)
    up = linear(z, p[f"{prefix}bottleneck.up.weight"], p[f"{prefix}bottleneck.up.bias"])
    return x + dropout(up, rate, rng), probs


def bottleneck_forward(
    state: ModelState,
    batch: EncoderInput,
    capture: CaptureMode | str = CaptureMode.FULL,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> EncoderOutputs:
    """Forward pass of a bottleneck configuration."""
    if not state.config.is_bottleneck:
        raise ValueError(f"{state.config.name} is a {state.config.variant.value} encoder, not bottleneck")
    capture = CaptureMode(capture)
    ids, mask = check_inputs(state.config, batch)
    rate = state.config.dropout if train else 0.0
    ctx = AttentionContext(mask, state.dtype)

    x = bottleneck_embed(state, ids, rate, rng)
    hidden_states = [x]
    attentions = []
    for layer in range(state.config.num_layers):
        x, probs = bottleneck_block(state, layer, x, ctx, rate, rng)
        hidden_states.append(x)
        attentions.append(probs)
    return assemble_outputs(state, x, mask, hidden_states, attentions, capture)
