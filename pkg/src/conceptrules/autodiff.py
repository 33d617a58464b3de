"""Minimal reverse-mode automatic differentiation on numpy buffers.

The engine is define-by-run: every operation builds a fresh graph node
holding the forward value, its parents and a closure computing parent
gradients from the output gradient.  All buffers are float64.  Gradients
accumulate additively, so calling ``backward`` twice without zeroing
doubles leaf gradients.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, NumericError, ShapeError

Array = np.ndarray


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """N-dimensional float64 array participating in a reverse-mode graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Optional[Array] = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Optional[Callable[[Array], Sequence[Optional[Array]]]] = None

    # -- construction -------------------------------------------------

    @staticmethod
    def _from_op(data: Array, parents: tuple["Tensor", ...],
                 backward_fn: Callable[[Array], Sequence[Optional[Array]]]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward_fn = backward_fn
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    # -- backward pass -------------------------------------------------

    def backward(self) -> None:
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.size != 1:
            raise ContractError("backward() requires a scalar loss, got shape %r" % (self.shape,))
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))

        # per-call gradients propagate through a local map so repeated
        # backward calls accumulate additively into .grad without
        # re-feeding previously stored gradients
        local: dict[int, Array] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = local.get(id(node))
            if g is None:
                continue
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g
            if node._backward_fn is None:
                continue
            for parent, pg in zip(node._parents, node._backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                prev = local.get(id(parent))
                local[id(parent)] = pg if prev is None else prev + pg

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def ensure_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# -- arithmetic ---------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = ensure_tensor(a), ensure_tensor(b)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = ensure_tensor(a), ensure_tensor(b)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = ensure_tensor(a), ensure_tensor(b)
    data = a.data * b.data

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._from_op(data, (a, b), backward)


def neg(a) -> Tensor:
    a = ensure_tensor(a)

    def backward(g):
        return (-g,)

    return Tensor._from_op(-a.data, (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = ensure_tensor(a), ensure_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError("matmul expects 2-D operands, got %r and %r" % (a.shape, b.shape))
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul inner dimensions differ: %r vs %r" % (a.shape, b.shape))
    data = a.data @ b.data

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor._from_op(data, (a, b), backward)


def reshape(a, shape) -> Tensor:
    a = ensure_tensor(a)
    old_shape = a.shape
    data = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(old_shape),)

    return Tensor._from_op(data, (a,), backward)


def take(a, index) -> Tensor:
    """Basic/advanced indexing with scatter-add gradient."""
    a = ensure_tensor(a)
    data = a.data[index]

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, index, g)
        return (out,)

    return Tensor._from_op(np.array(data, copy=True), (a,), backward)


def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = ensure_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.full_like(a.data, 1.0) * g,)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_exp, a.shape).copy(),)

    return Tensor._from_op(data, (a,), backward)


# -- min / max -----------------------------------------------------------


def minimum(a, b) -> Tensor:
    """Elementwise min; on exact ties the gradient goes to the first operand."""
    a, b = ensure_tensor(a), ensure_tensor(b)
    try:
        data = np.minimum(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    first = a.data <= b.data  # ties select the first operand

    def backward(g):
        ga = np.broadcast_to(g, data.shape) * first
        gb = np.broadcast_to(g, data.shape) * ~first
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._from_op(data, (a, b), backward)


def maximum(a, b) -> Tensor:
    """Elementwise max; on exact ties the gradient goes to the first operand."""
    a, b = ensure_tensor(a), ensure_tensor(b)
    try:
        data = np.maximum(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    first = a.data >= b.data

    def backward(g):
        ga = np.broadcast_to(g, data.shape) * first
        gb = np.broadcast_to(g, data.shape) * ~first
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._from_op(data, (a, b), backward)


# -- nonlinearities -------------------------------------------------------


def _check_finite(x: Array, op: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{op} received non-finite input")


def sigmoid(x) -> Tensor:
    x = ensure_tensor(x)
    _check_finite(x.data, "sigmoid")
    v = x.data
    data = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                    np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))

    def backward(g):
        return (g * data * (1.0 - data),)

    return Tensor._from_op(data, (x,), backward)


def leaky_relu(x, slope: float = 0.01) -> Tensor:
    x = ensure_tensor(x)
    _check_finite(x.data, "leaky_relu")
    pos = x.data > 0
    data = np.where(pos, x.data, slope * x.data)

    def backward(g):
        return (g * np.where(pos, 1.0, slope),)

    return Tensor._from_op(data, (x,), backward)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = ensure_tensor(x)
    _check_finite(x.data, "log_softmax")
    shift = x.data - x.data.max(axis=axis, keepdims=True)
    data = shift - np.log(np.exp(shift).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(data) * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(data, (x,), backward)


BCE_EPS = 1e-7


def binary_cross_entropy(p, target) -> Tensor:
    """Mean binary cross-entropy; probabilities are clamped to [1e-7, 1-1e-7].

    The clamp only guards the logarithms: the gradient is routed straight to
    ``p`` without masking at the clamp boundary.
    """
    p = ensure_tensor(p)
    t = np.asarray(target, dtype=np.float64)
    _check_finite(p.data, "binary_cross_entropy")
    _check_finite(t, "binary_cross_entropy")
    if t.shape != p.shape:
        raise ShapeError("binary_cross_entropy shapes differ: %r vs %r" % (p.shape, t.shape))
    pc = np.clip(p.data, BCE_EPS, 1.0 - BCE_EPS)
    n = pc.size
    data = np.asarray(-(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)).mean())

    def backward(g):
        return (g * (pc - t) / (pc * (1.0 - pc) * n),)

    return Tensor._from_op(data, (p,), backward)


# -- optimizer -------------------------------------------------------------


class Adam:
    """Adam with bias correction and decoupled weight decay.

    Holds first/second moment buffers and a step counter per construction;
    updates are deterministic functions of the parameter gradients.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-2,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.betas = (float(betas[0]), float(betas[1]))
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ShapeError("gradient shape %r does not match parameter %r"
                                 % (g.shape, p.data.shape))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.data -= self.lr * update
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
