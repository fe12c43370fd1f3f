"""Dense tensors with reverse-mode differentiation.

Every operation on a :class:`Tensor` that involves a tensor requiring
gradients records its parents and a backward closure. ``Tensor.backward``
walks the recorded graph in reverse topological order and accumulates
gradients into the leaves.
"""

from __future__ import annotations

import contextlib
import threading
from collections.abc import Callable, Iterator, Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

Array = NDArray[np.floating[Any]]
BackwardFn = Callable[[Array], None]

_grad_state = threading.local()


def is_grad_enabled() -> bool:
    """Whether operations currently record a graph (per thread)."""
    return bool(getattr(_grad_state, "enabled", True))


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (inference, finite differences)."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A numpy array plus the bookkeeping needed for reverse-mode gradients."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    # Makes ``ndarray <op> Tensor`` dispatch to the Tensor reflected operator.
    __array_priority__ = 100.0

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None,
    ) -> None:
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: Array = array
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    # ------------------------------------------------------------------ basics

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> Array:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    # --------------------------------------------------------------- autodiff

    def _accumulate(self, grad: Array) -> None:
        if not self.requires_grad:
            return
        grad = _unbroadcast(np.asarray(grad), self.shape).astype(self.dtype, copy=False)
        if self.grad is None:
            self.grad = np.array(grad, copy=True)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: ArrayLike | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf that requires gradients."""
        if grad is None:
            if self.size != 1:
                raise ValueError(
                    f"backward() without a seed gradient needs a scalar, got shape {self.shape}"
                )
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=self.dtype)
        order = _topological_order(self)
        self._accumulate(seed)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            # interior gradients are not needed once propagated
            node.grad = None

    # -------------------------------------------------------------- operators

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return mul(self, -1.0)

    def __pow__(self, exponent: float) -> Tensor:
        return power(self, exponent)

    def __matmul__(self, other: Any) -> Tensor:
        return matmul(self, other)

    def __rmatmul__(self, other: Any) -> Tensor:
        return matmul(other, self)

    def __getitem__(self, index: Any) -> Tensor:
        return getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        return transpose(self, axes if axes else None)

    def exp(self) -> Tensor:
        return exp(self)

    def log(self) -> Tensor:
        return log(self)

    def sqrt(self) -> Tensor:
        return power(self, 0.5)


def as_tensor(value: Any, like: Tensor | None = None) -> Tensor:
    """Wrap ``value`` as a constant tensor (dtype follows ``like`` when given)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype) if dtype is not None else value)


def _result(data: Array, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited and parent.requires_grad:
                stack.append((parent, False))
    return order


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    tb = as_tensor(b)
    return as_tensor(a, like=tb), tb


# ------------------------------------------------------------------ elementwise


def add(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(grad: Array) -> None:
        ta._accumulate(grad)
        tb._accumulate(grad)

    return _result(ta.data + tb.data, (ta, tb), backward)


def sub(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(grad: Array) -> None:
        ta._accumulate(grad)
        tb._accumulate(-grad)

    return _result(ta.data - tb.data, (ta, tb), backward)


def mul(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(grad: Array) -> None:
        ta._accumulate(grad * tb.data)
        tb._accumulate(grad * ta.data)

    return _result(ta.data * tb.data, (ta, tb), backward)


def div(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(grad: Array) -> None:
        ta._accumulate(grad / tb.data)
        tb._accumulate(-grad * ta.data / (tb.data * tb.data))

    return _result(ta.data / tb.data, (ta, tb), backward)


def power(a: Tensor, exponent: float) -> Tensor:
    base = a.data

    def backward(grad: Array) -> None:
        a._accumulate(grad * exponent * np.power(base, exponent - 1.0))

    return _result(np.power(base, exponent), (a,), backward)


def exp(a: Tensor) -> Tensor:
    value = np.exp(a.data)

    def backward(grad: Array) -> None:
        a._accumulate(grad * value)

    return _result(value, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(grad: Array) -> None:
        a._accumulate(grad / a.data)

    return _result(np.log(a.data), (a,), backward)


def tanh(a: Tensor) -> Tensor:
    value = np.tanh(a.data)

    def backward(grad: Array) -> None:
        a._accumulate(grad * (1.0 - value * value))

    return _result(value, (a,), backward)


def clip(a: Tensor, low: float, high: float) -> Tensor:
    """Clamp values; gradient passes only where the input was inside the range."""
    inside = (a.data >= low) & (a.data <= high)

    def backward(grad: Array) -> None:
        a._accumulate(grad * inside)

    return _result(np.clip(a.data, low, high), (a,), backward)


def maximum(a: Tensor, floor: float) -> Tensor:
    """Elementwise ``max(a, floor)`` against a constant floor."""
    above = a.data >= floor

    def backward(grad: Array) -> None:
        a._accumulate(grad * above)

    return _result(np.maximum(a.data, floor), (a,), backward)


# --------------------------------------------------------------- reductions


def tensor_sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    shape = a.shape

    def backward(grad: Array) -> None:
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        a._accumulate(np.broadcast_to(grad, shape))

    return _result(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward)


def tensor_mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[i] for i in axes]))
    return tensor_sum(a, axis=axis, keepdims=keepdims) / float(count)


# ------------------------------------------------------------------- shapes


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    original = a.shape

    def backward(grad: Array) -> None:
        a._accumulate(grad.reshape(original))

    return _result(a.data.reshape(tuple(shape)), (a,), backward)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    perm = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(perm))

    def backward(grad: Array) -> None:
        a._accumulate(np.transpose(grad, inverse))

    return _result(np.transpose(a.data, perm), (a,), backward)


def getitem(a: Tensor, index: Any) -> Tensor:
    shape = a.shape
    dtype = a.dtype

    def backward(grad: Array) -> None:
        full = np.zeros(shape, dtype=dtype)
        np.add.at(full, index, grad)
        a._accumulate(full)

    return _result(a.data[index], (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(grad: Array) -> None:
        for t, piece in zip(tensors, np.split(grad, splits, axis=axis), strict=True):
            t._accumulate(piece)

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def pad(a: Tensor, widths: Sequence[tuple[int, int]]) -> Tensor:
    """Zero padding; ``widths`` has one (before, after) pair per axis."""
    slices = tuple(slice(before, before + dim) for (before, _), dim in zip(widths, a.shape, strict=True))

    def backward(grad: Array) -> None:
        a._accumulate(grad[slices])

    return _result(np.pad(a.data, list(widths)), (a,), backward)


# ------------------------------------------------------------------- linear


def matmul(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)
    if ta.ndim == 1:
        return reshape(matmul(reshape(ta, (1, ta.shape[0])), tb), tb.shape[:-2] + tb.shape[-1:])
    if tb.ndim == 1:
        return reshape(matmul(ta, reshape(tb, (tb.shape[0], 1))), ta.shape[:-1])

    def backward(grad: Array) -> None:
        if ta.requires_grad:
            ta._accumulate(grad @ np.swapaxes(tb.data, -1, -2))
        if tb.requires_grad:
            tb._accumulate(np.swapaxes(ta.data, -1, -2) @ grad)

    return _result(ta.data @ tb.data, (ta, tb), backward)


def embedding(table: Tensor, ids: NDArray[np.integer[Any]]) -> Tensor:
    """Row gather ``table[ids]`` with scatter-add backward."""
    ids = np.asarray(ids)

    def backward(grad: Array) -> None:
        full = np.zeros(table.shape, dtype=table.dtype)
        np.add.at(full, ids, grad)
        table._accumulate(full)

    return _result(table.data[ids], (table,), backward)
