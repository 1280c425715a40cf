"""Pure-numpy implementations of the hot array kernels.

This is the fallback backend; :mod:`vidfactor.kernels` picks the compiled
Cython versions when they are importable. Both backends must produce
bit-identical results: the patch matrix uses the same (dt, dh, dw, c) column
order and max-pooling breaks ties by taking the first maximum in window scan
order.
"""

import numpy as np

BACKEND_NAME = "numpy"


def extract_patches3d(xp, kt, kh, kw):
    """im2col for a stride-1 3-D convolution over a zero-padded volume.

    Parameters
    ----------
    xp : ndarray [N, Tp, Hp, Wp, C]
        Already padded input volume.
    kt, kh, kw : int
        Kernel extent along time/height/width.

    Returns
    -------
    ndarray [N*T*H*W, kt*kh*kw*C], C-contiguous, where T = Tp-kt+1 etc.
    Column index runs over (dt, dh, dw, c) in C order.
    """
    n, tp, hp, wp, c = xp.shape
    t, h, w = tp - kt + 1, hp - kh + 1, wp - kw + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (kt, kh, kw), axis=(1, 2, 3))
    # win: [N, T, H, W, C, kt, kh, kw] -> (dt, dh, dw, c) column order
    cols = win.transpose(0, 1, 2, 3, 5, 6, 7, 4).reshape(n * t * h * w, kt * kh * kw * c)
    return np.ascontiguousarray(cols)


def maxpool3d_forward(x, pt, ph, pw):
    """Non-overlapping max pool; returns (pooled, argmax index per window).

    The index is the flat position inside the (pt, ph, pw) window, scan
    order (dt, dh, dw); ties resolve to the first maximum.
    """
    n, t, h, w, c = x.shape
    if t % pt or h % ph or w % pw:
        raise ValueError(f"pool {(pt, ph, pw)} does not divide {(t, h, w)}")
    t2, h2, w2 = t // pt, h // ph, w // pw
    xw = (
        x.reshape(n, t2, pt, h2, ph, w2, pw, c)
        .transpose(0, 1, 3, 5, 7, 2, 4, 6)
        .reshape(n, t2, h2, w2, c, pt * ph * pw)
    )
    idx = xw.argmax(axis=-1)
    out = np.take_along_axis(xw, idx[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), idx.astype(np.int32)


def maxpool3d_backward(dout, idx, x_shape, pt, ph, pw):
    """Scatter pooled gradients back to the argmax positions."""
    n, t, h, w, c = x_shape
    t2, h2, w2 = t // pt, h // ph, w // pw
    dwin = np.zeros((n, t2, h2, w2, c, pt * ph * pw), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None].astype(np.int64), dout[..., None], axis=-1)
    dx = (
        dwin.reshape(n, t2, h2, w2, c, pt, ph, pw)
        .transpose(0, 1, 5, 2, 6, 3, 7, 4)
        .reshape(x_shape)
    )
    return np.ascontiguousarray(dx)
