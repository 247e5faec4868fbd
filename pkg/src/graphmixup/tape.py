"""Minimal reverse-mode autodiff over numpy arrays.

Every op records a closure that maps the output gradient to parent
gradients; ``Tensor.backward`` walks the graph in reverse topological
order. Only the operations the model needs are provided.
"""

from __future__ import annotations

import numpy as np

from . import ndmath


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_back")

    def __init__(self, value, requires_grad=False, _parents=(), _back=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._back = _back

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.value.shape

    @property
    def T(self):
        return Tensor(self.value.T, _parents=(self,), _back=lambda g: (g.T,))

    def backward(self, grad=None):
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents)
        self.grad = np.ones_like(self.value) if grad is None else np.asarray(grad, dtype=np.float64)
        for node in reversed(order):
            if node._back is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._back(node.grad)):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        return Tensor(self.value + other.value, _parents=(self, other),
                      _back=lambda g: (_unbroadcast(g, self.shape), _unbroadcast(g, other.shape)))

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.value, _parents=(self,), _back=lambda g: (-g,))

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)

    def __mul__(self, other):
        other = _lift(other)
        a, b = self.value, other.value
        return Tensor(a * b, _parents=(self, other),
                      _back=lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        a, b = self.value, other.value
        return Tensor(a / b, _parents=(self, other),
                      _back=lambda g: (_unbroadcast(g / b, a.shape),
                                       _unbroadcast(-g * a / (b * b), b.shape)))

    def __matmul__(self, other):
        other = _lift(other)
        a, b = self.value, other.value
        return Tensor(a @ b, _parents=(self, other),
                      _back=lambda g: (g @ b.T if self.requires_grad else None,
                                       a.T @ g if other.requires_grad else None))

    def __getitem__(self, idx):
        out = self.value[idx]

        def back(g):
            full = np.zeros_like(self.value)
            np.add.at(full, idx, g)
            return (full,)
        return Tensor(out, _parents=(self,), _back=back)

    # elementwise ----------------------------------------------------------
    def tanh(self):
        t = np.tanh(self.value)
        return Tensor(t, _parents=(self,), _back=lambda g: (g * (1.0 - t * t),))

    def sigmoid(self):
        s = ndmath.sigmoid(self.value)
        return Tensor(s, _parents=(self,), _back=lambda g: (g * s * (1.0 - s),))

    def abs(self):
        sign = np.sign(self.value)
        return Tensor(np.abs(self.value), _parents=(self,), _back=lambda g: (g * sign,))

    def square(self):
        v = self.value
        return Tensor(v * v, _parents=(self,), _back=lambda g: (2.0 * g * v,))

    def sqrt(self):
        r = np.sqrt(self.value)
        return Tensor(r, _parents=(self,), _back=lambda g: (g / (2.0 * r),))

    # reductions -----------------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        shape = self.shape

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)
        return Tensor(self.value.sum(axis=axis, keepdims=keepdims), _parents=(self,), _back=back)

    def mean(self, axis=None, keepdims=False):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def param(value):
    return Tensor(value, requires_grad=True)


def concat(tensors, axis=1):
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return Tensor(np.concatenate([t.value for t in tensors], axis=axis),
                  _parents=tuple(tensors),
                  _back=lambda g: tuple(np.split(g, splits, axis=axis)))


def affine(x, W, b=None):
    """``x @ W.T + b`` with gradients from :func:`ndmath.grad_affine`."""
    xv, Wv = x.value, W.value
    y = ndmath.affine(xv, Wv, None if b is None else b.value)
    parents = (x, W) if b is None else (x, W, b)

    def back(g):
        dX, dW, db = ndmath.grad_affine(g, xv, Wv, with_bias=b is not None)
        return (dX, dW) if b is None else (dX, dW, db)
    return Tensor(y, _parents=parents, _back=back)


def cross_entropy(logits, labels, class_weights=None):
    loss, d = ndmath.softmax_cross_entropy(logits.value, labels, class_weights)
    return Tensor(loss, _parents=(logits,), _back=lambda g: (g * d,))
