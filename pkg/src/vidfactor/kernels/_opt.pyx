# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot array kernels.

Must stay bit-identical to :mod:`vidfactor.kernels.reference`: same patch
column order (dt, dh, dw, c) and first-maximum tie breaking in max pooling.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"

ctypedef fused real:
    float
    double


def extract_patches3d(xp, int kt, int kh, int kw):
    if xp.dtype not in (np.float32, np.float64):
        raise TypeError(f"unsupported dtype {xp.dtype}")
    return _extract_patches3d(np.ascontiguousarray(xp), kt, kh, kw)


def _extract_patches3d(real[:, :, :, :, ::1] xp, int kt, int kh, int kw):
    cdef Py_ssize_t n = xp.shape[0], tp = xp.shape[1], hp = xp.shape[2]
    cdef Py_ssize_t wp = xp.shape[3], c = xp.shape[4]
    cdef Py_ssize_t t = tp - kt + 1, h = hp - kh + 1, w = wp - kw + 1
    cdef Py_ssize_t k = kt * kh * kw * c
    out_np = np.empty((n * t * h * w, k), dtype=np.float32 if real is float else np.float64)
    cdef real[:, ::1] out = out_np
    cdef Py_ssize_t b, i, j, l, dt, dh, dw, ch, row, col
    for b in range(n):
        for i in range(t):
            for j in range(h):
                for l in range(w):
                    row = ((b * t + i) * h + j) * w + l
                    col = 0
                    for dt in range(kt):
                        for dh in range(kh):
                            for dw in range(kw):
                                for ch in range(c):
                                    out[row, col] = xp[b, i + dt, j + dh, l + dw, ch]
                                    col += 1
    return out_np


def maxpool3d_forward(x, int pt, int ph, int pw):
    if x.shape[1] % pt or x.shape[2] % ph or x.shape[3] % pw:
        raise ValueError(f"pool {(pt, ph, pw)} does not divide {x.shape[1:4]}")
    if x.dtype not in (np.float32, np.float64):
        raise TypeError(f"unsupported dtype {x.dtype}")
    return _maxpool3d_forward(np.ascontiguousarray(x), pt, ph, pw)


def _maxpool3d_forward(real[:, :, :, :, ::1] x, int pt, int ph, int pw):
    cdef Py_ssize_t n = x.shape[0], t = x.shape[1], h = x.shape[2]
    cdef Py_ssize_t w = x.shape[3], c = x.shape[4]
    cdef Py_ssize_t t2 = t / pt, h2 = h / ph, w2 = w / pw
    out_np = np.empty((n, t2, h2, w2, c), dtype=np.float32 if real is float else np.float64)
    idx_np = np.empty((n, t2, h2, w2, c), dtype=np.int32)
    cdef real[:, :, :, :, ::1] out = out_np
    cdef cnp.int32_t[:, :, :, :, ::1] idx = idx_np
    cdef Py_ssize_t b, i, j, l, ch, dt, dh, dw, flat
    cdef real best, v
    cdef cnp.int32_t besti
    for b in range(n):
        for i in range(t2):
            for j in range(h2):
                for l in range(w2):
                    for ch in range(c):
                        best = x[b, i * pt, j * ph, l * pw, ch]
                        besti = 0
                        flat = 0
                        for dt in range(pt):
                            for dh in range(ph):
                                for dw in range(pw):
                                    v = x[b, i * pt + dt, j * ph + dh, l * pw + dw, ch]
                                    if v > best:
                                        best = v
                                        besti = <cnp.int32_t> flat
                                    flat += 1
                        out[b, i, j, l, ch] = best
                        idx[b, i, j, l, ch] = besti
    return out_np, idx_np


def maxpool3d_backward(dout, idx, x_shape, int pt, int ph, int pw):
    if dout.dtype not in (np.float32, np.float64):
        raise TypeError(f"unsupported dtype {dout.dtype}")
    return _maxpool3d_backward(
        np.ascontiguousarray(dout), np.ascontiguousarray(idx), tuple(x_shape), pt, ph, pw
    )


def _maxpool3d_backward(real[:, :, :, :, ::1] dout, cnp.int32_t[:, :, :, :, ::1] idx,
                        tuple x_shape, int pt, int ph, int pw):
    dx_np = np.zeros(x_shape, dtype=np.float32 if real is float else np.float64)
    cdef real[:, :, :, :, ::1] dx = dx_np
    cdef Py_ssize_t n = dout.shape[0], t2 = dout.shape[1], h2 = dout.shape[2]
    cdef Py_ssize_t w2 = dout.shape[3], c = dout.shape[4]
    cdef Py_ssize_t b, i, j, l, ch, flat, dt, dh, dw
    for b in range(n):
        for i in range(t2):
            for j in range(h2):
                for l in range(w2):
                    for ch in range(c):
                        flat = idx[b, i, j, l, ch]
                        dt = flat / (ph * pw)
                        dh = (flat / pw) % ph
                        dw = flat % pw
                        dx[b, i * pt + dt, j * ph + dh, l * pw + dw, ch] = dout[b, i, j, l, ch]
    return dx_np
