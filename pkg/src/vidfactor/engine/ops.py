"""Differentiable array operations.

Everything takes tensors or plain arrays (auto-wrapped as constants) and
returns a :class:`Tensor`. Convolutions are stride-1 with "same" zero
padding; pooling is non-overlapping. Data layout is channels-last
throughout: volumes are [N, T, H, W, C], frames [N, H, W, C].
"""

from __future__ import annotations

import numpy as np

from .. import kernels as K
from .tensor import Tensor, as_tensor, make_node


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(dy):
        return _unbroadcast(dy, a.data.shape), _unbroadcast(dy, b.data.shape)

    return make_node(out, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(dy):
        return _unbroadcast(dy, a.data.shape), _unbroadcast(-dy, b.data.shape)

    return make_node(out, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(dy):
        return (
            _unbroadcast(dy * b.data, a.data.shape),
            _unbroadcast(dy * a.data, b.data.shape),
        )

    return make_node(out, (a, b), backward)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(dy):
        return (
            _unbroadcast(dy / b.data, a.data.shape),
            _unbroadcast(-dy * a.data / (b.data * b.data), b.data.shape),
        )

    return make_node(out, (a, b), backward)


def neg(a):
    a = as_tensor(a)
    return make_node(-a.data, (a,), lambda dy: (-dy,))


def absolute(a):
    """|a|, with subgradient 0 at exactly zero (sign(0) == 0)."""
    a = as_tensor(a)
    return make_node(np.abs(a.data), (a,), lambda dy: (dy * np.sign(a.data),))


def square(a):
    a = as_tensor(a)
    return make_node(a.data * a.data, (a,), lambda dy: (dy * (2.0 * a.data),))


def maximum(a, b):
    """Elementwise max; on ties the gradient goes to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data >= b.data
    out = np.where(take_a, a.data, b.data)

    def backward(dy):
        return (
            _unbroadcast(dy * take_a, a.data.shape),
            _unbroadcast(dy * ~take_a, b.data.shape),
        )

    return make_node(out, (a, b), backward)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return make_node(np.where(mask, a.data, 0.0), (a,), lambda dy: (dy * mask,))


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return make_node(out, (a,), lambda dy: (dy * (1.0 - out * out),))


def stop_gradient(a):
    """Identity in the forward pass; no gradient flows through."""
    a = as_tensor(a)
    return Tensor(a.data)


# ---------------------------------------------------------------------------
# reductions and shape


def reduce_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(dy):
        if axis is not None and not keepdims:
            dy = np.expand_dims(dy, axis)
        return (np.broadcast_to(dy, a.data.shape),)

    return make_node(out, (a,), backward)


def reduce_mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    scale = out.size / a.data.size

    def backward(dy):
        if axis is not None and not keepdims:
            dy = np.expand_dims(dy, axis)
        return (np.broadcast_to(dy * scale, a.data.shape),)

    return make_node(out, (a,), backward)


def reshape(a, shape):
    a = as_tensor(a)
    return make_node(a.data.reshape(shape), (a,), lambda dy: (dy.reshape(a.data.shape),))


def concat_channels(parts):
    parts = [as_tensor(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=-1)
    sizes = [p.data.shape[-1] for p in parts]
    bounds = np.cumsum([0] + sizes)

    def backward(dy):
        return tuple(dy[..., lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

    return make_node(out, tuple(parts), backward)


def slice_channels(a, lo, hi):
    a = as_tensor(a)
    out = a.data[..., lo:hi]

    def backward(dy):
        dx = np.zeros_like(a.data)
        dx[..., lo:hi] = dy
        return (dx,)

    return make_node(out, (a,), backward)


def select_time(a, index):
    """[N, T, ...] -> [N, ...] at one time index."""
    a = as_tensor(a)
    out = a.data[:, index]

    def backward(dy):
        dx = np.zeros_like(a.data)
        dx[:, index] = dy
        return (dx,)

    return make_node(out, (a,), backward)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a, w):
    a, w = as_tensor(a), as_tensor(w)
    out = a.data @ w.data

    def backward(dy):
        return dy @ w.data.T, a.data.T @ dy

    return make_node(out, (a, w), backward)


# ---------------------------------------------------------------------------
# convolution / pooling / upsampling


def _pad3d(x, pt, ph, pw):
    if pt == 0 and ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw), (0, 0)))


def _conv3d_forward(x, w, b):
    kt, kh, kw, cin, cout = w.shape
    n, t, h, wd, _ = x.shape
    cols = K.extract_patches3d(_pad3d(x, kt // 2, kh // 2, kw // 2), kt, kh, kw)
    y = cols @ w.reshape(-1, cout)
    if b is not None:
        y += b
    return y.reshape(n, t, h, wd, cout)


def _conv3d_grad_w(x, dy, kshape):
    kt, kh, kw, cin, cout = kshape
    cols = K.extract_patches3d(_pad3d(x, kt // 2, kh // 2, kw // 2), kt, kh, kw)
    return (cols.T @ dy.reshape(-1, cout)).reshape(kshape)


def _conv3d_grad_x(dy, w):
    # Stride-1 same-padded conv: input gradient is another same conv of the
    # output gradient with spatially flipped, channel-transposed kernels.
    wf = np.ascontiguousarray(w[::-1, ::-1, ::-1].transpose(0, 1, 2, 4, 3))
    return _conv3d_forward(dy, wf, None)


def conv3d(x, w, b):
    """3-D convolution, stride 1, same zero padding, odd kernel dims.

    x: [N, T, H, W, Cin]; w: [kt, kh, kw, Cin, Cout]; b: [Cout].
    """
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.data.shape[-1] != w.data.shape[3]:
        raise ValueError(
            f"conv3d channel mismatch: input has {x.data.shape[-1]}, kernel expects {w.data.shape[3]}"
        )
    out = _conv3d_forward(x.data, w.data, b.data)

    def backward(dy):
        dx = _conv3d_grad_x(dy, w.data) if x.requires_grad else None
        dw = _conv3d_grad_w(x.data, dy, w.data.shape) if w.requires_grad else None
        db = dy.sum(axis=(0, 1, 2, 3)) if b.requires_grad else None
        return dx, dw, db

    return make_node(out, (x, w, b), backward)


def conv2d(x, w, b):
    """2-D convolution on frames via the 3-D path with a singleton time axis.

    x: [N, H, W, Cin]; w: [kh, kw, Cin, Cout]; b: [Cout].
    """
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    w5 = w.data[None]
    out = _conv3d_forward(x.data[:, None], w5, b.data)[:, 0]

    def backward(dy):
        dy5 = dy[:, None]
        dx = _conv3d_grad_x(dy5, w5)[:, 0] if x.requires_grad else None
        dw = _conv3d_grad_w(x.data[:, None], dy5, w5.shape)[0] if w.requires_grad else None
        db = dy.sum(axis=(0, 1, 2)) if b.requires_grad else None
        return dx, dw, db

    return make_node(out, (x, w, b), backward)


def maxpool3d(x, pools):
    x = as_tensor(x)
    pt, ph, pw = pools
    out, idx = K.maxpool3d_forward(x.data, pt, ph, pw)

    def backward(dy):
        return (K.maxpool3d_backward(dy, idx, x.data.shape, pt, ph, pw),)

    return make_node(out, (x,), backward)


def upsample3d(x, factors):
    """Nearest-neighbor upsampling of [N, T, H, W, C] by integer factors."""
    x = as_tensor(x)
    ft, fh, fw = factors
    n, t, h, w, c = x.data.shape
    expanded = np.broadcast_to(
        x.data[:, :, None, :, None, :, None, :], (n, t, ft, h, fh, w, fw, c)
    )
    out = np.ascontiguousarray(expanded).reshape(n, t * ft, h * fh, w * fw, c)

    def backward(dy):
        return (dy.reshape(n, t, ft, h, fh, w, fw, c).sum(axis=(2, 4, 6)),)

    return make_node(out, (x,), backward)


def upsample2d(x, factor):
    """Nearest-neighbor upsampling of frames [N, H, W, C] by one factor."""
    x = as_tensor(x)
    f = factor
    n, h, w, c = x.data.shape
    expanded = np.broadcast_to(x.data[:, :, None, :, None, :], (n, h, f, w, f, c))
    out = np.ascontiguousarray(expanded).reshape(n, h * f, w * f, c)

    def backward(dy):
        return (dy.reshape(n, h, f, w, f, c).sum(axis=(2, 4)),)

    return make_node(out, (x,), backward)


# ---------------------------------------------------------------------------
# cross convolution


def _windows2d(x, k):
    """[N, H, W, C] -> [N, H, W, C, k, k] sliding windows of the padded frame."""
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    return np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))


def cross_conv2d(x, kernel_set):
    """Per-sample, per-channel true 2-D convolution with zero fill.

    x: [N, H, W, C]; kernel_set: [N, C, k, k], one kernel per channel of the
    matching sample. Channels never mix. True convolution (kernels flipped
    relative to correlation), so a delta kernel displaced one column right
    shifts the feature map content one column right.
    """
    x, kernel_set = as_tensor(x), as_tensor(kernel_set)
    if x.data.shape[0] != kernel_set.data.shape[0] or x.data.shape[-1] != kernel_set.data.shape[1]:
        raise ValueError(
            f"cross_conv2d shape mismatch: features {x.data.shape} vs kernels {kernel_set.data.shape}"
        )
    k = kernel_set.data.shape[-1]
    kf = kernel_set.data[:, :, ::-1, ::-1]
    win = _windows2d(x.data, k)
    out = np.einsum("nijcuv,ncuv->nijc", win, kf)

    def backward(dy):
        dx = None
        if x.requires_grad:
            # Transpose of true convolution is correlation with the same kernels.
            dy_win = _windows2d(dy, k)
            dx = np.einsum("nijcuv,ncuv->nijc", dy_win, kernel_set.data)
        dk = None
        if kernel_set.requires_grad:
            dkf = np.einsum("nijc,nijcuv->ncuv", dy, win)
            dk = dkf[:, :, ::-1, ::-1]
        return dx, dk

    return make_node(out, (x, kernel_set), backward)


# ---------------------------------------------------------------------------
# classification

def softmax(logits):
    """Plain numpy softmax over the last axis (evaluation helper)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of integer labels under softmax(logits).

    logits: [N, K] tensor; labels: [N] integer array.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    n = logits.data.shape[0]
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=-1))
    out = np.asarray((logsumexp - z[np.arange(n), labels]).mean(), dtype=logits.data.dtype)

    def backward(dy):
        probs = softmax(logits.data)
        probs[np.arange(n), labels] -= 1.0
        return (dy * probs / n,)

    return make_node(out, (logits,), backward)


# ---------------------------------------------------------------------------
# operator sugar on Tensor


def _coerce(other):
    return other if isinstance(other, Tensor) else Tensor(other)


Tensor.__add__ = lambda self, o: add(self, _coerce(o))
Tensor.__radd__ = lambda self, o: add(_coerce(o), self)
Tensor.__sub__ = lambda self, o: sub(self, _coerce(o))
Tensor.__rsub__ = lambda self, o: sub(_coerce(o), self)
Tensor.__mul__ = lambda self, o: mul(self, _coerce(o))
Tensor.__rmul__ = lambda self, o: mul(_coerce(o), self)
Tensor.__truediv__ = lambda self, o: div(self, _coerce(o))
Tensor.__rtruediv__ = lambda self, o: div(_coerce(o), self)
Tensor.__neg__ = lambda self: neg(self)
