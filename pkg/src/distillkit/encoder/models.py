"""Data models for the encoder module."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator

from distillkit.errors import ShapeMismatchError
from distillkit.numerics import Tensor


class EncoderVariant(str, Enum):
    """Transformer block family."""

    STANDARD = "standard"  # post-LN BERT block
    BOTTLENECK = "bottleneck"  # down-projection, narrow attention/FFN stack, up-projection


class CaptureMode(str, Enum):
    """What a forward pass keeps."""

    LOGITS_ONLY = "logits_only"  # MLM logits and the last hidden state
    FULL = "full"  # every hidden state, every attention map, MLM logits
    BACKBONE = "backbone"  # last hidden state only, no MLM head


class TaskHeadKind(str, Enum):
    TOKEN = "token"
    SEQUENCE = "sequence"


class EncoderConfig(BaseModel):
    """Architecture of a teacher or student encoder."""

    model_config = {"extra": "forbid"}

    name: str = Field("custom", description="Preset or user label")
    num_layers: int = Field(..., ge=1, description="Transformer blocks")
    hidden_dim: int = Field(..., ge=1, description="Block input/output width D")
    embed_dim: int | None = Field(None, ge=1, description="Token embedding width (defaults to D)")
    num_heads: int = Field(..., ge=1, description="Attention heads H")
    ffn_expansion: float = Field(4.0, gt=0.0, description="FFN width / attention width")
    vocab_size: int = Field(..., ge=6, description="|V|")
    max_position: int = Field(512, ge=1, description="Learned position table length")
    variant: EncoderVariant = Field(EncoderVariant.STANDARD, description="Block family")
    bottleneck_dim: int | None = Field(None, ge=1, description="Intra-block width (bottleneck only)")
    num_ffn_blocks: int = Field(1, ge=1, le=4, description="Stacked FFNs per block (bottleneck only)")
    conv_kernel: int = Field(3, ge=1, description="Embedding up-projection kernel (bottleneck only)")
    dropout: float = Field(0.1, ge=0.0, lt=1.0, description="Hidden dropout while training")
    init_std: float = Field(0.02, gt=0.0, description="Truncated-normal init scale")
    tie_mlm_decoder: bool = Field(True, description="MLM decoder shares the token embedding table")

    @model_validator(mode="after")
    def _check_shapes(self) -> EncoderConfig:
        if self.embed_dim is None:
            self.embed_dim = self.hidden_dim
        if self.variant is EncoderVariant.STANDARD:
            if self.embed_dim != self.hidden_dim:
                raise ValueError("standard encoders need embed_dim == hidden_dim")
            if self.hidden_dim % self.num_heads:
                raise ValueError(
                    f"hidden_dim {self.hidden_dim} is not divisible by num_heads {self.num_heads}"
                )
        else:
            if self.bottleneck_dim is None:
                raise ValueError("bottleneck encoders need bottleneck_dim")
            if self.bottleneck_dim % self.num_heads:
                raise ValueError(
                    f"bottleneck_dim {self.bottleneck_dim} is not divisible by num_heads {self.num_heads}"
                )
            if self.conv_kernel % 2 != 1:
                raise ValueError(f"conv_kernel must be odd, got {self.conv_kernel}")
        return self

    @property
    def is_bottleneck(self) -> bool:
        return self.variant is EncoderVariant.BOTTLENECK

    @property
    def token_dim(self) -> int:
        """Width of the token embedding table."""
        return int(self.embed_dim if self.embed_dim is not None else self.hidden_dim)

    @property
    def attention_dim(self) -> int:
        """Width at which attention and FFNs run."""
        if self.is_bottleneck and self.bottleneck_dim is not None:
            return self.bottleneck_dim
        return self.hidden_dim

    @property
    def head_dim(self) -> int:
        return self.attention_dim // self.num_heads

    @property
    def ffn_dim(self) -> int:
        return int(round(self.attention_dim * self.ffn_expansion))


@dataclass
class ModelState:
    """Learnable parameters of one encoder plus its task heads.

    ``params`` is ordered: embeddings, blocks in depth order, MLM head, then
    task heads (``head.token.*`` / ``head.sequence.*``).
    """

    config: EncoderConfig
    params: dict[str, Tensor]
    head_labels: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self.params[name]
        except KeyError:
            raise KeyError(f"model has no parameter {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in self.params

    def named_parameters(self, include_heads: bool = True) -> Iterator[tuple[str, Tensor]]:
        for name, tensor in self.params.items():
            if include_heads or not name.startswith("head."):
                yield name, tensor

    def backbone_parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters(include_heads=False))

    def num_elements(self, include_heads: bool = False) -> int:
        return sum(t.size for _, t in self.named_parameters(include_heads=include_heads))

    @property
    def dtype(self) -> np.dtype[Any]:
        return next(iter(self.params.values())).dtype

    def copy(self) -> ModelState:
        """Deep copy with fresh leaf tensors."""
        return ModelState(
            config=self.config.model_copy(deep=True),
            params={n: Tensor(t.data.copy(), name=n) for n, t in self.params.items()},
            head_labels=dict(self.head_labels),
        )

    def astype(self, dtype: Any) -> ModelState:
        return ModelState(
            config=self.config.model_copy(deep=True),
            params={n: Tensor(t.data.astype(dtype), name=n) for n, t in self.params.items()},
            head_labels=dict(self.head_labels),
        )

    def freeze(self) -> ModelState:
        """Mark every parameter constant (teacher during distillation)."""
        for tensor in self.params.values():
            tensor.requires_grad = False
            tensor.grad = None
        return self

    def load_arrays(self, arrays: dict[str, NDArray[Any]]) -> None:
        """Overwrite parameter values in place; shapes must match."""
        for name, value in arrays.items():
            target = self[name]
            if target.shape != tuple(value.shape):
                raise ShapeMismatchError(f"{name}: expected {target.shape}, got {tuple(value.shape)}")
            target.data[...] = value


@dataclass
class EncoderOutputs:
    """What one forward pass exposes.

    ``hidden_states[l]`` is ``[B, N, D]`` for l = 0..L (0 is the embedding
    output) and ``attentions[l]`` is ``[B, H, N, N]`` for block l; both are
    empty unless the capture mode is FULL.
    """

    last_hidden: Tensor
    attention_mask: NDArray[np.int64]
    hidden_states: list[Tensor] = field(default_factory=list)
    attentions: list[Tensor] = field(default_factory=list)
    mlm_logits: Tensor | None = None

    @property
    def num_layers(self) -> int:
        return len(self.hidden_states) - 1

    def require_full(self) -> None:
        if not self.hidden_states or not self.attentions:
            raise ValueError("layer-wise losses need outputs captured with CaptureMode.FULL")

    def require_logits(self) -> Tensor:
        if self.mlm_logits is None:
            raise ValueError("MLM losses need outputs captured with MLM logits")
        return self.mlm_logits


class ParameterEntry(BaseModel):
    """Location of one tensor inside a checkpoint payload."""

    model_config = {"extra": "forbid"}

    name: str
    shape: list[int]
    offset: int = Field(..., ge=0, description="Byte offset into the payload")
    nbytes: int = Field(..., ge=0)


class CheckpointManifest(BaseModel):
    """JSON side of a checkpoint; the raw values live in ``payload``."""

    model_config = {"extra": "forbid"}

    format_version: int = 1
    config: EncoderConfig
    dtype: str = Field(..., description="Little-endian numpy dtype string, e.g. '<f8'")
    payload: str = Field(..., description="Payload file name, relative to the manifest")
    sha256: str = Field(..., description="Digest of the payload bytes")
    head_labels: dict[str, int] = Field(default_factory=dict)
    params: list[ParameterEntry]
