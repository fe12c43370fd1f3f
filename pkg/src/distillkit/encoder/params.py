"""Parameter layout, exact counts, presets and initialisation."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from distillkit.encoder.models import EncoderConfig, EncoderVariant, ModelState
from distillkit.numerics import Tensor

logger = logging.getLogger(__name__)

BERT_CASED_VOCAB = 28996
BERT_UNCASED_VOCAB = 30522


# ------------------------------------------------------------------ presets


def _preset(name: str, vocab_size: int | None) -> dict[str, Any]:
    table: dict[str, dict[str, Any]] = {
        "base": {"num_layers": 12, "hidden_dim": 768, "num_heads": 12, "vocab_size": BERT_CASED_VOCAB},
        "distilled": {"num_layers": 6, "hidden_dim": 768, "num_heads": 12, "vocab_size": BERT_CASED_VOCAB},
        "tiny": {"num_layers": 4, "hidden_dim": 312, "num_heads": 12, "vocab_size": BERT_UNCASED_VOCAB},
        "tiny6": {"num_layers": 6, "hidden_dim": 768, "num_heads": 12, "vocab_size": BERT_UNCASED_VOCAB},
        "mobile": {
            "num_layers": 24,
            "hidden_dim": 512,
            "embed_dim": 128,
            "bottleneck_dim": 128,
            "num_heads": 4,
            "num_ffn_blocks": 4,
            "variant": EncoderVariant.BOTTLENECK,
            "vocab_size": BERT_UNCASED_VOCAB,
        },
        "desk_teacher": {
            "num_layers": 4, "hidden_dim": 64, "num_heads": 4, "vocab_size": 1000, "max_position": 128,
        },
        "desk_student": {
            "num_layers": 2, "hidden_dim": 64, "num_heads": 4, "vocab_size": 1000, "max_position": 128,
        },
    }
    if name not in table:
        raise ValueError(f"unknown encoder preset {name!r}; choose from {sorted(table)}")
    fields = dict(table[name])
    if vocab_size is not None:
        fields["vocab_size"] = vocab_size
    return fields


PRESET_NAMES = ("base", "distilled", "tiny", "tiny6", "mobile", "desk_teacher", "desk_student")


def preset(name: str, vocab_size: int | None = None, **overrides: Any) -> EncoderConfig:
    """Named architecture; ``vocab_size`` and any field can be overridden."""
    fields = _preset(name, vocab_size)
    fields.update(overrides)
    return EncoderConfig(name=name, **fields)


# ------------------------------------------------------------------- layout


def parameter_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Ordered parameter names and shapes of an encoder (no task heads)."""
    D, V, P = config.hidden_dim, config.vocab_size, config.max_position
    E = config.token_dim
    A, F = config.attention_dim, config.ffn_dim
    shapes: dict[str, tuple[int, ...]] = {"embeddings.token": (V, E)}
    if config.is_bottleneck:
        shapes["embeddings.conv.weight"] = (config.conv_kernel, E, D)
        shapes["embeddings.conv.bias"] = (D,)
    shapes["embeddings.position"] = (P, D)
    shapes["embeddings.ln.gamma"] = (D,)
    shapes["embeddings.ln.beta"] = (D,)

    for layer in range(config.num_layers):
        p = f"layers.{layer}."
        if config.is_bottleneck:
            for proj in ("input", "shared"):
                shapes[f"{p}bottleneck.{proj}.weight"] = (D, A)
                shapes[f"{p}bottleneck.{proj}.bias"] = (A,)
                shapes[f"{p}bottleneck.{proj}_ln.gamma"] = (A,)
                shapes[f"{p}bottleneck.{proj}_ln.beta"] = (A,)
        value_in = D if config.is_bottleneck else A
        for proj, fan_in in (("query", A), ("key", A), ("value", value_in), ("output", A)):
            shapes[f"{p}attn.{proj}.weight"] = (fan_in, A)
            shapes[f"{p}attn.{proj}.bias"] = (A,)
        shapes[f"{p}attn_ln.gamma"] = (A,)
        shapes[f"{p}attn_ln.beta"] = (A,)
        ffn_blocks = config.num_ffn_blocks if config.is_bottleneck else 1
        for j in range(ffn_blocks):
            f = f"{p}ffn.{j}." if config.is_bottleneck else f"{p}ffn."
            shapes[f"{f}in.weight"] = (A, F)
            shapes[f"{f}in.bias"] = (F,)
            shapes[f"{f}out.weight"] = (F, A)
            shapes[f"{f}out.bias"] = (A,)
            shapes[f"{f}ln.gamma"] = (A,)
            shapes[f"{f}ln.beta"] = (A,)
        if config.is_bottleneck:
            shapes[f"{p}bottleneck.up.weight"] = (A, D)
            shapes[f"{p}bottleneck.up.bias"] = (D,)

    shapes["mlm.transform.weight"] = (D, E)
    shapes["mlm.transform.bias"] = (E,)
    shapes["mlm.ln.gamma"] = (E,)
    shapes["mlm.ln.beta"] = (E,)
    if not config.tie_mlm_decoder:
        shapes["mlm.decoder.weight"] = (E, V)
    shapes["mlm.bias"] = (V,)
    return shapes


def count_params(config: EncoderConfig) -> int:
    """Exact parameter count in closed form (embeddings, blocks, MLM head)."""
    D, V, P = config.hidden_dim, config.vocab_size, config.max_position
    E, A, F = config.token_dim, config.attention_dim, config.ffn_dim

    embeddings = V * E + P * D + 2 * D
    if config.is_bottleneck:
        embeddings += config.conv_kernel * E * D + D

    ffn = 2 * A * F + F + A + 2 * A
    if config.is_bottleneck:
        bottlenecks = 2 * (D * A + 3 * A)
        attention = 3 * (A * A + A) + (D * A + A) + 2 * A
        block = bottlenecks + attention + config.num_ffn_blocks * ffn + A * D + D
    else:
        block = 4 * (A * A + A) + 2 * A + ffn

    head = D * E + E + 2 * E + V
    if not config.tie_mlm_decoder:
        head += E * V
    return embeddings + config.num_layers * block + head


# ----------------------------------------------------------- initialisation


def truncated_normal(
    rng: np.random.Generator, shape: tuple[int, ...], std: float, dtype: Any
) -> np.ndarray[Any, Any]:
    """Normal(0, std) truncated at two standard deviations (rejection resampling)."""
    draw_dtype = np.float32 if np.dtype(dtype) == np.float32 else np.float64
    draws = rng.standard_normal(shape, dtype=draw_dtype)
    outside = np.abs(draws) > 2.0
    while outside.any():
        draws[outside] = rng.standard_normal(int(outside.sum()), dtype=draw_dtype)
        outside = np.abs(draws) > 2.0
    draws *= std
    return draws.astype(dtype, copy=False)


def _initial_value(
    name: str, shape: tuple[int, ...], std: float, rng: np.random.Generator, dtype: Any
) -> np.ndarray[Any, Any]:
    if name.endswith(".gamma"):
        return np.ones(shape, dtype=dtype)
    if name.endswith((".beta", ".bias")):
        return np.zeros(shape, dtype=dtype)
    return truncated_normal(rng, shape, std, dtype)


def init_model_state(config: EncoderConfig, seed: int = 0, dtype: Any = np.float64) -> ModelState:
    """Fresh encoder: truncated-normal weights, zero biases, unit layer-norm scales."""
    rng = np.random.default_rng(seed)
    params = {
        name: Tensor(_initial_value(name, shape, config.init_std, rng, dtype), name=name)
        for name, shape in parameter_shapes(config).items()
    }
    state = ModelState(config=config, params=params)
    logger.debug(f"Initialised {config.name} encoder with {state.num_elements():,} parameters")
    return state


# ------------------------------------------------------------------ memory


def estimate_activation_bytes(config: EncoderConfig, batch: int, seq_len: int, itemsize: int = 4) -> int:
    """Peak bytes live during one no-grad backbone forward.

    Parameters plus the widest per-block working set: the block input, the
    query/key/value projections and context, and either the score and
    probability tensors of attention or the FFN intermediate activation.
    """
    D, A, F, H = config.hidden_dim, config.attention_dim, config.ffn_dim, config.num_heads
    tokens = batch * seq_len
    params = count_params(config)
    carried = tokens * D * (2 if config.is_bottleneck else 1)
    attention = tokens * 4 * A + 2 * batch * H * seq_len * seq_len
    feed_forward = tokens * (F + 2 * A)
    embedding = tokens * (config.token_dim + 2 * D)
    working = max(carried + max(attention, feed_forward), embedding)
    return (params + working) * itemsize
