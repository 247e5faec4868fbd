"""Dense float64 primitives with hand-derived gradients, Adam, and gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, NumericError


def init_uniform(rng, shape, fan_in=None):
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; fan_in defaults to the last axis."""
    fan_in = shape[-1] if fan_in is None else fan_in
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def affine(X, W, b=None):
    """Y = X @ W.T + b."""
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if X.ndim != 2 or W.ndim != 2 or X.shape[1] != W.shape[1]:
        raise DimensionError(f"affine: X {X.shape} incompatible with W {W.shape}")
    Y = X @ W.T
    if b is not None:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (W.shape[0],):
            raise DimensionError(f"affine: bias {b.shape}, expected ({W.shape[0]},)")
        Y = Y + b
    return Y


def grad_affine(upstream, X, W, with_bias=True):
    """Gradients of ``affine`` given dL/dY; returns (dX, dW, db)."""
    dX = upstream @ W
    dW = upstream.T @ X
    db = upstream.sum(axis=0) if with_bias else None
    return dX, dW, db


def tanh(x):
    return np.tanh(x)


def dtanh(x):
    t = np.tanh(x)
    return 1.0 - t * t


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # exp of a non-positive argument only, so neither branch overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def dsigmoid(x):
    s = sigmoid(x)
    return s * (1.0 - s)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits, labels, class_weights=None):
    """Mean over rows of ``-w[y] * log softmax(logits)[y]``.

    Returns ``(loss, dlogits)``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    if n == 0:
        raise DomainError("cross-entropy of an empty batch")
    if labels.shape != (n,):
        raise DimensionError(f"{n} logit rows but {labels.shape} labels")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise DomainError("label outside the class range")
    w = np.ones(n) if class_weights is None else np.asarray(class_weights, dtype=np.float64)[labels]
    if np.any(w <= 0):
        raise DomainError("class weights must be positive")
    logp = log_softmax(logits)
    rows = np.arange(n)
    loss = -(w * logp[rows, labels]).sum() / n
    d = np.exp(logp)
    d[rows, labels] -= 1.0
    d *= (w / n)[:, None]
    return float(loss), d


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 5e-4
    decoupled: bool = True
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """One bias-corrected Adam update, applied in place to ``params``.

    Weight decay is folded into the gradient as an L2 term, or applied
    directly to the weights (AdamW) when ``state.decoupled`` is true.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for tensor '{name}'")
        if g.shape != params[name].shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter '{name}' {params[name].shape}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, g in grads.items():
        p = params[name]
        if not state.decoupled and state.weight_decay:
            g = g + state.weight_decay * p
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        update = m_hat / (np.sqrt(v_hat) + state.eps)
        if state.decoupled and state.weight_decay:
            update = update + state.weight_decay * p
        p -= state.lr * update
    return params


def grad_check_tensors(loss_and_grad, params, epsilon=1e-5, max_coords=None, seed=0,
                       floor=1e-6):
    """Per-tensor max relative error between analytic and central-difference gradients.

    ``loss_and_grad(params)`` must return ``(loss, grads)`` with ``grads`` a
    dict keyed like ``params``. Tensors absent from ``grads`` are skipped.
    With ``max_coords`` set, at most that many coordinates per tensor are
    sampled. The relative error of one coordinate is
    ``|a - n| / max(|a|, |n|, floor)``.
    """
    _, grads = loss_and_grad(params)
    grads = {k: np.array(v, dtype=np.float64) for k, v in grads.items()}
    rng = np.random.default_rng(seed)
    out = {}
    for name, g in grads.items():
        p = params[name]
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = np.sort(rng.choice(flat.size, max_coords, replace=False))
        worst = 0.0
        for i in idx:
            old = flat[i]
            flat[i] = old + epsilon
            fp = loss_and_grad(params)[0]
            flat[i] = old - epsilon
            fm = loss_and_grad(params)[0]
            flat[i] = old
            num = (fp - fm) / (2 * epsilon)
            ana = g.reshape(-1)[i]
            err = abs(ana - num) / max(abs(ana), abs(num), floor)
            worst = max(worst, err)
        out[name] = worst
    return out


def grad_check(loss_and_grad, params, epsilon=1e-5, max_coords=None, seed=0):
    """Max relative error over all checked coordinates of all tensors."""
    errs = grad_check_tensors(loss_and_grad, params, epsilon, max_coords, seed)
    return max(errs.values()) if errs else 0.0
