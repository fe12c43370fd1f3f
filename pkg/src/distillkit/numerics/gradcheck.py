"""Gradient registry and finite-difference verification."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping
from typing import Protocol

import numpy as np

from distillkit.errors import NonFiniteError, ShapeMismatchError
from distillkit.numerics.models import GradCheckReport
from distillkit.numerics.tensor import Array, Tensor, no_grad

logger = logging.getLogger(__name__)

# Relative errors are measured against max(|analytic| + |numeric|, REL_FLOOR)
# so that coordinates with vanishing gradients are compared absolutely.
REL_FLOOR = 1e-3


class HasParameters(Protocol):
    def named_parameters(self) -> Iterable[tuple[str, Tensor]]: ...


ParamSource = Mapping[str, Tensor] | HasParameters


def named_parameters(params: ParamSource) -> dict[str, Tensor]:
    """Normalise a mapping or an object exposing ``named_parameters()``."""
    if isinstance(params, Mapping):
        return dict(params)
    return dict(params.named_parameters())


class GradientTape:
    """Registry of trainable parameters.

    Operations record themselves on the tensors they produce; the tape only
    keeps track of which leaves are parameters and hands their gradients back
    by name, with zeros for parameters the loss never touched.
    """

    def __init__(self, params: ParamSource | None = None) -> None:
        self._params: dict[str, Tensor] = {}
        if params is not None:
            for name, tensor in named_parameters(params).items():
                self.watch(name, tensor)

    def watch(self, name: str, tensor: Tensor) -> Tensor:
        tensor.requires_grad = True
        self._params[name] = tensor
        return tensor

    @property
    def parameters(self) -> dict[str, Tensor]:
        return dict(self._params)

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def gradient(self, loss: Tensor) -> dict[str, Array]:
        """Run the backward pass from ``loss`` and collect parameter gradients."""
        if loss.size != 1:
            raise ShapeMismatchError(f"loss must be a scalar, got shape {loss.shape}")
        self.zero_grad()
        loss.backward()
        grads: dict[str, Array] = {}
        for name, tensor in self._params.items():
            grads[name] = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        return grads


def _evaluate(f: Callable[[], Tensor]) -> float:
    with no_grad():
        value = f().item()
    if not np.isfinite(value):
        raise NonFiniteError(f"function value is not finite ({value}) at a perturbed point")
    return value


def grad_check(
    f: Callable[[], Tensor],
    params: ParamSource,
    eps: float = 1e-5,
    num_coords: int = 200,
    seed: int = 0,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``f`` with central differences.

    ``f`` takes no arguments and reads the parameter tensors it closes over;
    coordinates are perturbed in place. When the parameters hold fewer than
    ``num_coords`` elements every coordinate is checked, otherwise a seeded
    sample of ``num_coords`` coordinates is drawn across all parameters.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    tensors = named_parameters(params)
    if not tensors:
        raise ValueError("grad_check needs at least one parameter")

    tape = GradientTape(tensors)
    loss = f()
    if not np.isfinite(loss.item()):
        raise NonFiniteError(f"function value is not finite ({loss.item()})")
    analytic = tape.gradient(loss)

    names = list(tensors)
    sizes = np.array([tensors[name].size for name in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    flat_ids = (
        np.arange(total) if total <= num_coords else np.sort(rng.choice(total, num_coords, replace=False))
    )

    errors: list[float] = []
    worst: tuple[float, str | None, tuple[int, ...] | None] = (-1.0, None, None)
    for flat in flat_ids:
        slot = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[slot]
        tensor = tensors[name]
        index = np.unravel_index(int(flat - offsets[slot]), tensor.shape)
        original = tensor.data[index].copy()
        try:
            tensor.data[index] = original + eps
            plus = _evaluate(f)
            tensor.data[index] = original - eps
            minus = _evaluate(f)
        finally:
            tensor.data[index] = original
        numeric = (plus - minus) / (2.0 * eps)
        exact = float(analytic[name][index])
        rel = abs(exact - numeric) / max(abs(exact) + abs(numeric), REL_FLOOR)
        errors.append(rel)
        if rel > worst[0]:
            worst = (rel, name, tuple(int(i) for i in index))

    report = GradCheckReport(
        max_rel_error=float(max(errors)),
        mean_rel_error=float(np.mean(errors)),
        num_checked=len(errors),
        eps=eps,
        worst_param=worst[1],
        worst_index=worst[2],
    )
    logger.debug(
        f"grad_check: {report.num_checked} coords, max rel {report.max_rel_error:.3e} "
        f"at {report.worst_param}{report.worst_index}"
    )
    return report


def gradient_of(f: Callable[[], Tensor], params: ParamSource) -> dict[str, Array]:
    """Convenience wrapper: gradients of ``f`` by parameter name."""
    return GradientTape(params).gradient(f())
