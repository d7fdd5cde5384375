"""Dense float64 tensors with define-by-run reverse-mode differentiation.

A ``Tensor`` records the operation that produced it (its parents and a
backward closure) whenever one of its inputs requires a gradient. ``backward``
walks that graph in reverse topological order and accumulates gradients on the
leaves.
"""
from __future__ import annotations

import contextlib
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from apps.cpfm.exceptions import ContractError, DimensionError

GELU_C = float(np.sqrt(2.0 / np.pi))


class _GradMode(threading.local):
    enabled = True


_grad_mode = _GradMode()


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference)."""
    previous = _grad_mode.enabled
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def is_grad_enabled() -> bool:
    return _grad_mode.enabled


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _normalize_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for a in axes:
        if not -ndim <= a < ndim:
            raise DimensionError(f'axis {a} out of range for {ndim}-d tensor')
        out.append(a % ndim)
    return tuple(sorted(out))


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (slice, int, type(Ellipsis))) or i is None for i in items)


class Tensor:
    """n-dimensional float64 array with an optional gradient."""

    # make ndarray <op> Tensor defer to the Tensor reflected operators
    __array_ufunc__ = None

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        self.values = np.array(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @classmethod
    def _from_op(cls, values: np.ndarray, parents: Sequence['Tensor'], backward) -> 'Tensor':
        out = cls.__new__(cls)
        out.values = np.asarray(values, dtype=np.float64)
        out.grad = None
        out.name = None
        track = _grad_mode.enabled and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = tuple(parents) if track else ()
        out._backward = backward if track else None
        return out

    # -- introspection -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        return float(self.values.reshape(-1)[0]) if self.values.size == 1 else float('nan')

    def numpy(self) -> np.ndarray:
        return self.values

    def detach(self) -> 'Tensor':
        return Tensor(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f' {self.name!r}' if self.name else ''
        return f'Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})'

    def __len__(self) -> int:
        return len(self.values)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> 'Tensor':
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        try:
            values = self.values + other.values
        except ValueError as exc:
            raise DimensionError(f'cannot add shapes {a_shape} and {b_shape}') from exc

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor._from_op(values, (self, other), backward)

    __radd__ = __add__

    def __neg__(self) -> 'Tensor':
        return Tensor._from_op(-self.values, (self,), lambda g: (-g,))

    def __sub__(self, other) -> 'Tensor':
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        try:
            values = self.values - other.values
        except ValueError as exc:
            raise DimensionError(f'cannot subtract shapes {a_shape} and {b_shape}') from exc

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)

        return Tensor._from_op(values, (self, other), backward)

    def __rsub__(self, other) -> 'Tensor':
        return as_tensor(other) - self

    def __mul__(self, other) -> 'Tensor':
        other = as_tensor(other)
        a, b = self.values, other.values
        try:
            values = a * b
        except ValueError as exc:
            raise DimensionError(f'cannot multiply shapes {a.shape} and {b.shape}') from exc

        def backward(g):
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor._from_op(values, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'Tensor':
        other = as_tensor(other)
        a, b = self.values, other.values
        try:
            values = a / b
        except ValueError as exc:
            raise DimensionError(f'cannot divide shapes {a.shape} and {b.shape}') from exc

        def backward(g):
            return _unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)

        return Tensor._from_op(values, (self, other), backward)

    def __rtruediv__(self, other) -> 'Tensor':
        return as_tensor(other) / self

    def __matmul__(self, other) -> 'Tensor':
        other = as_tensor(other)
        a, b = self.values, other.values
        if a.ndim < 2 or b.ndim < 2:
            raise DimensionError('matmul needs operands of rank >= 2')
        if a.shape[-1] != b.shape[-2]:
            raise DimensionError(f'matmul shape mismatch {a.shape} @ {b.shape}')
        values = np.matmul(a, b)

        def backward(g):
            ga = np.matmul(g, np.swapaxes(b, -1, -2))
            gb = np.matmul(np.swapaxes(a, -1, -2), g)
            return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

        return Tensor._from_op(values, (self, other), backward)

    def __rmatmul__(self, other) -> 'Tensor':
        return as_tensor(other) @ self

    # -- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        shape = self.shape
        axes = _normalize_axes(axis, self.ndim)
        values = self.values.sum(axis=axes, keepdims=keepdims)

        def backward(g):
            if not keepdims:
                g = np.expand_dims(g, axes) if axes else g
            return (np.broadcast_to(g, shape),)

        return Tensor._from_op(values, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        axes = _normalize_axes(axis, self.ndim)
        count = int(np.prod([self.shape[a] for a in axes])) if axes else 1
        return self.sum(axis=axes, keepdims=keepdims) / float(max(count, 1))

    # -- structure -----------------------------------------------------------

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        try:
            values = self.values.reshape(shape)
        except ValueError as exc:
            raise DimensionError(f'cannot reshape {original} into {shape}') from exc
        return Tensor._from_op(values, (self,), lambda g: (g.reshape(original),))

    def swapaxes(self, a: int, b: int) -> 'Tensor':
        values = np.swapaxes(self.values, a, b)
        return Tensor._from_op(values, (self,), lambda g: (np.swapaxes(g, a, b),))

    def transpose(self, *axes) -> 'Tensor':
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = tuple(np.argsort(axes))
        values = np.transpose(self.values, axes)
        return Tensor._from_op(values, (self,), lambda g: (np.transpose(g, inverse),))

    @property
    def T(self) -> 'Tensor':
        return self.transpose()

    def broadcast_to(self, shape: Sequence[int]) -> 'Tensor':
        original = self.shape
        shape = tuple(shape)
        if shape == original:
            return self
        try:
            values = np.broadcast_to(self.values, shape)
        except ValueError as exc:
            raise DimensionError(f'cannot broadcast {original} to {shape}') from exc
        return Tensor._from_op(values, (self,), lambda g: (_unbroadcast(g, original),))

    def __getitem__(self, index) -> 'Tensor':
        shape = self.shape
        values = self.values[index]
        basic = _is_basic_index(index)

        def backward(g):
            full = np.zeros(shape, dtype=np.float64)
            if basic:
                full[index] = g
            else:
                np.add.at(full, index, g)
            return (full,)

        return Tensor._from_op(values, (self,), backward)

    # -- elementwise functions ---------------------------------------------

    def exp(self) -> 'Tensor':
        e = np.exp(self.values)
        return Tensor._from_op(e, (self,), lambda g: (g * e,))

    def log(self) -> 'Tensor':
        x = self.values
        return Tensor._from_op(np.log(x), (self,), lambda g: (g / x,))

    def tanh(self) -> 'Tensor':
        t = np.tanh(self.values)
        return Tensor._from_op(t, (self,), lambda g: (g * (1.0 - t * t),))

    def square(self) -> 'Tensor':
        x = self.values
        return Tensor._from_op(x * x, (self,), lambda g: (2.0 * g * x,))

    def gelu(self) -> 'Tensor':
        """GELU, tanh approximation."""
        x = self.values
        inner = GELU_C * (x + 0.044715 * x ** 3)
        t = np.tanh(inner)
        values = 0.5 * x * (1.0 + t)

        def backward(g):
            d_inner = GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
            return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

        return Tensor._from_op(values, (self,), backward)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``.

    Leaves used several times receive the sum of their gradient contributions;
    repeated calls accumulate into existing gradients.
    """
    if loss.size != 1:
        raise ContractError(f'backward needs a scalar loss, got shape {loss.shape}')
    if not loss.requires_grad:
        return
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            g = np.array(g, dtype=np.float64)
            node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad


def zero_grad(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None
