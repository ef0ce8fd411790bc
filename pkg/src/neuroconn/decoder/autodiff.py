"""Minimal reverse-mode autodiff over float64 numpy arrays.

Tensors form a tape; backward() walks it in reverse topological order.
Convolution forward/backward run on the selected kernel backend (compiled or
numpy, see neuroconn.backend); everything else is plain numpy. All math is
64-bit so finite-difference gradient checks are meaningful.
"""

from __future__ import annotations

import numpy as np

from .. import backend


class Tensor:
    """Array value with an optional gradient slot and tape linkage."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def backward(self):
        """Accumulate gradients of this scalar into every reachable tensor."""
        if self.value.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.value.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; non-tensor operands become constants
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(as_tensor(other), -1.0))

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    t.grad += g


def _node(value: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(value)
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value + b.value

    def backward(g):
        _accum(a, _unbroadcast(g, a.value.shape))
        _accum(b, _unbroadcast(g, b.value.shape))

    return _node(value, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value * b.value

    def backward(g):
        _accum(a, _unbroadcast(g * b.value, a.value.shape))
        _accum(b, _unbroadcast(g * a.value, b.value.shape))

    return _node(value, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.value.shape} @ {b.value.shape}")
    value = a.value @ b.value

    def backward(g):
        _accum(a, g @ b.value.T)
        _accum(b, a.value.T @ g)

    return _node(value, (a, b), backward)


def pow_scalar(a, p: float) -> Tensor:
    a = as_tensor(a)
    value = a.value**p

    def backward(g):
        _accum(a, g * p * a.value ** (p - 1.0))

    return _node(value, (a,), backward)


def square(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        _accum(a, g * 2.0 * a.value)

    return _node(a.value * a.value, (a,), backward)


def log_clamped(a, floor: float = 1e-6) -> Tensor:
    """log(max(x, floor)); gradient is zero where the clamp is active."""
    a = as_tensor(a)
    clamped = np.maximum(a.value, floor)
    live = a.value > floor

    def backward(g):
        _accum(a, np.where(live, g / clamped, 0.0))

    return _node(np.log(clamped), (a,), backward)


def elu(a) -> Tensor:
    a = as_tensor(a)
    neg = np.exp(np.minimum(a.value, 0.0)) - 1.0
    value = np.where(a.value > 0, a.value, neg)

    def backward(g):
        _accum(a, g * np.where(a.value > 0, 1.0, neg + 1.0))

    return _node(value, (a,), backward)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    value = a.value.reshape(shape)

    def backward(g):
        _accum(a, g.reshape(a.value.shape))

    return _node(value, (a,), backward)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    value = a.value.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.value.shape).copy())

    return _node(value, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.value.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.value.shape[i] for i in axes]))
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def variance(a, axis, keepdims: bool = False) -> Tensor:
    """Population variance along `axis`, built from primitive ops."""
    centered = add(a, mul(mean(a, axis=axis, keepdims=True), -1.0))
    return mean(square(centered), axis=axis, keepdims=keepdims)


def conv2d(x, w, stride=(1, 1), padding=(0, 0), groups: int = 1) -> Tensor:
    """Grouped 2-D cross-correlation on the kernel backend.

    x: [N, C, H, W]; w: [F, C//groups, KH, KW]. Padding is symmetric zeros.
    """
    x, w = as_tensor(x), as_tensor(w)
    sh, sw = stride
    ph, pw = padding
    if x.value.ndim != 4 or w.value.ndim != 4:
        raise ValueError(f"conv2d expects 4-D tensors, got {x.value.shape} and {w.value.shape}")
    n, c, h, wid = x.value.shape
    f, cg, kh, kw = w.value.shape
    if c != cg * groups:
        raise ValueError(
            f"conv2d channel mismatch: input has {c} channels but kernel expects "
            f"{cg} x {groups} groups"
        )
    if f % groups:
        raise ValueError(f"conv2d: {f} filters not divisible by {groups} groups")
    if h + 2 * ph < kh or wid + 2 * pw < kw:
        raise ValueError(
            f"conv2d kernel ({kh}x{kw}) larger than padded input "
            f"({h + 2 * ph}x{wid + 2 * pw})"
        )
    value = backend.conv2d_forward(x.value, w.value, sh, sw, ph, pw, groups)

    def backward(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            _accum(x, backend.conv2d_backward_input(g, w.value, h, wid, sh, sw, ph, pw, groups))
        if w.requires_grad:
            _accum(w, backend.conv2d_backward_kernel(g, x.value, kh, kw, sh, sw, ph, pw, groups))

    return _node(value, (x, w), backward)


def avg_pool_w(x, width: int, stride: int | None = None) -> Tensor:
    """Average pooling along the last axis with window (1 x width).

    The window is clamped to the input length so short feature axes degrade
    to identity instead of erroring.
    """
    x = as_tensor(x)
    w_in = x.value.shape[-1]
    k = min(width, w_in)
    s = stride if stride is not None else k
    s = max(1, min(s, w_in))
    n_out = (w_in - k) // s + 1
    value = np.empty(x.value.shape[:-1] + (n_out,))
    for i in range(n_out):
        value[..., i] = x.value[..., i * s : i * s + k].mean(axis=-1)

    def backward(g):
        dx = np.zeros_like(x.value)
        for i in range(n_out):
            dx[..., i * s : i * s + k] += g[..., i : i + 1] / k
        _accum(x, dx)

    return _node(value, (x,), backward)


def dropout(x, p: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout: zero a fraction ~p and rescale survivors by 1/(1-p)."""
    if not (0 <= p < 1):
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    x = as_tensor(x)
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    scale = (rng.random(x.value.shape) >= p) / (1.0 - p)

    def backward(g):
        _accum(x, g * scale)

    return _node(x.value * scale, (x,), backward)


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    train: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Batch normalization over (N, H, W) per channel of a [N, C, H, W] tensor.

    Training mode normalizes by batch statistics and updates the running
    buffers in place; evaluation mode uses the buffers as constants.
    """
    x = as_tensor(x)
    shape = (1, -1, 1, 1)
    if train:
        mu = mean(x, axis=(0, 2, 3), keepdims=True)
        var = mean(square(add(x, mul(mu, -1.0))), axis=(0, 2, 3), keepdims=True)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.value.reshape(-1)
        running_var *= 1.0 - momentum
        running_var += momentum * var.value.reshape(-1)
    else:
        mu = Tensor(running_mean.reshape(shape))
        var = Tensor(running_var.reshape(shape))
    inv_std = pow_scalar(add(var, eps), -0.5)
    x_hat = mul(add(x, mul(mu, -1.0)), inv_std)
    return add(mul(x_hat, reshape(gamma, shape)), reshape(beta, shape))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a plain array (used for predictions and losses)."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels) -> Tensor:
    """Mean negative log softmax at the true class.

    Gradient w.r.t. logits is (softmax - onehot) / N.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.value.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch of {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must be in [0, {k}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    z = logits.value - logits.value.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    value = -log_probs[np.arange(n), labels].mean()

    def backward(g):
        probs = np.exp(log_probs)
        probs[np.arange(n), labels] -= 1.0
        _accum(logits, g * probs / n)

    return _node(np.asarray(value), (logits,), backward)


def mae_loss(pred, target) -> Tensor:
    """Mean absolute error; subgradient sign(pred - target)/N, zero at ties."""
    pred = as_tensor(pred)
    target = np.asarray(target, dtype=np.float64)
    if pred.value.shape != target.shape:
        raise ValueError(f"prediction shape {pred.value.shape} != target shape {target.shape}")
    diff = pred.value - target
    value = np.abs(diff).mean()

    def backward(g):
        _accum(pred, g * np.sign(diff) / diff.size)

    return _node(np.asarray(value), (pred,), backward)
