"""Standard post-LN BERT encoder forward pass."""

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
from distillkit.numerics import Tensor, embedding, layer_norm
from distillkit.numerics.functional import dropout


def embed(state: ModelState, ids: np.ndarray, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Token plus learned position embeddings, layer-normalised."""
    p = state.params
    length = ids.shape[1]
    tokens = embedding(p["embeddings.token"], ids)
    positions = p["embeddings.position"][:length]
    out = layer_norm(tokens + positions, p["embeddings.ln.gamma"], p["embeddings.ln.beta"])
    return dropout(out, rate, rng)


def standard_block(
    state: ModelState,
    layer: int,
    x: Tensor,
    ctx: AttentionContext,
    rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """One post-LN block; returns (output, attention probabilities)."""
    p = state.params
    prefix = f"layers.{layer}."
    attended, probs = multi_head_attention(state, f"{prefix}attn.", x, x, x, ctx)
    h = layer_norm(x + dropout(attended, rate, rng), p[f"{prefix}attn_ln.gamma"], p[f"{prefix}attn_ln.beta"])
    return feed_forward(state, f"{prefix}ffn.", h, rate, rng), probs


def forward(
    state: ModelState,
    batch: EncoderInput,
    capture: CaptureMode | str = CaptureMode.FULL,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> EncoderOutputs:
    """Run the encoder on ``batch``.

    Dropout is active only when ``train`` is set and a generator is given.
    Bottleneck configurations are routed to :func:`bottleneck_forward`.
    """
    if state.config.is_bottleneck:
        from distillkit.encoder.bottleneck import bottleneck_forward

        return bottleneck_forward(state, batch, capture=capture, train=train, rng=rng)

    capture = CaptureMode(capture)
    ids, mask = check_inputs(state.config, batch)
    rate = state.config.dropout if train else 0.0
    ctx = AttentionContext(mask, state.dtype)

    x = embed(state, ids, rate, rng)
    hidden_states = [x]
    attentions = []
    for layer in range(state.config.num_layers):
        x, probs = standard_block(state, layer, x, ctx, rate, rng)
        hidden_states.append(x)
        attentions.append(probs)
    return assemble_outputs(state, x, mask, hidden_states, attentions, capture)
