"""Optimizer, learning-rate schedule and gradient clipping."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from distillkit.errors import ShapeMismatchError
from distillkit.numerics import Tensor
from distillkit.train.models import OptimizerConfig

Array = np.ndarray[Any, Any]

# Parameters excluded from weight decay.
NO_DECAY_SUFFIXES = (".bias", ".gamma", ".beta")


class LinearWarmupDecay:
    """Linear warmup from 0 to the peak rate, then linear decay to 0 at ``total_steps``."""

    def __init__(self, peak_lr: float, total_steps: int, warmup_fraction: float = 0.0) -> None:
        if total_steps < 0:
            raise ValueError(f"total_steps must be non-negative, got {total_steps}")
        self.peak_lr = peak_lr
        self.total_steps = total_steps
        self.warmup_steps = int(round(warmup_fraction * total_steps))

    def lr(self, step: int) -> float:
        """Learning rate for 0-based ``step``; 0 at and beyond the horizon."""
        if step >= self.total_steps:
            return 0.0
        if step < self.warmup_steps:
            return self.peak_lr * step / self.warmup_steps
        return self.peak_lr * (self.total_steps - step) / max(1, self.total_steps - self.warmup_steps)

    def state_dict(self) -> dict[str, float | int]:
        return {"peak_lr": self.peak_lr, "total_steps": self.total_steps, "warmup_steps": self.warmup_steps}

    def load_state_dict(self, state: Mapping[str, float | int]) -> None:
        self.peak_lr = float(state["peak_lr"])
        self.total_steps = int(state["total_steps"])
        self.warmup_steps = int(state["warmup_steps"])


def global_norm(grads: Mapping[str, Array]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads: Mapping[str, Array], max_norm: float | None) -> tuple[dict[str, Array], float]:
    """Scale ``grads`` so their joint L2 norm is at most ``max_norm``; returns (grads, norm before)."""
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return dict(grads), norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


class AdamW:
    """Adam moments with decoupled weight decay, updating tensors in place."""

    def __init__(self, params: Mapping[str, Tensor], config: OptimizerConfig | None = None) -> None:
        self.params = dict(params)
        self.config = config or OptimizerConfig()
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in self.params.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in self.params.items()}

    @staticmethod
    def decays(name: str) -> bool:
        return not name.endswith(NO_DECAY_SUFFIXES)

    def step(self, grads: Mapping[str, Array], lr: float) -> None:
        cfg = self.config
        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - cfg.beta1**t
        correction2 = 1.0 - cfg.beta2**t
        for name, tensor in self.params.items():
            grad = grads.get(name)
            if grad is None:
                continue
            if grad.shape != tensor.shape:
                raise ShapeMismatchError(f"gradient for {name} has shape {grad.shape}, parameter {tensor.shape}")
            m = self._m[name]
            v = self._v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad * grad
            update = (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
            if cfg.weight_decay and self.decays(name):
                update = update + cfg.weight_decay * tensor.data
            tensor.data -= (lr * update).astype(tensor.dtype, copy=False)

    def state_dict(self) -> dict[str, Any]:
        return {
            "step_count": self.step_count,
            "m": {k: v.copy() for k, v in self._m.items()},
            "v": {k: v.copy() for k, v in self._v.items()},
        }

    def load_state_dict(self, state: Mapping[str, Any]) -> None:
        self.step_count = int(state["step_count"])
        self._m = {k: np.array(v, copy=True) for k, v in state["m"].items()}
        self._v = {k: np.array(v, copy=True) for k, v in state["v"].items()}


@dataclass(frozen=True)
class StepStats:
    lr: float
    grad_norm: float


def optimizer_step(
    optimizer: AdamW, grads: Mapping[str, Array], step_index: int, schedule: LinearWarmupDecay
) -> StepStats:
    """Clip ``grads``, look up the scheduled rate for ``step_index`` and apply one update."""
    clipped, norm = clip_by_global_norm(grads, optimizer.config.clip_norm)
    lr = schedule.lr(step_index)
    optimizer.step(clipped, lr)
    return StepStats(lr=lr, grad_norm=norm)
