"""Pure-numpy convolution and pooling kernels (im2col / col2im path).

All arrays are NHWC. Weights are (KH, KW, Cin, Cout) for dense convolution
and (KH, KW, C) for depthwise convolution. This module is the fallback
backend; see kernels_numba for the jitted twin with identical signatures.
"""

from __future__ import annotations

import numpy as np


def _out_dim(n: int, k: int, stride: int, pad: int) -> int:
    return (n + 2 * pad - k) // stride + 1


def _gather_cols(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Return patch tensor of shape (B, Ho, Wo, KH, KW, C)."""
    b, h, w, c = x.shape
    ho = _out_dim(h, kh, stride, pad)
    wo = _out_dim(w, kw, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = np.empty((b, ho, wo, kh, kw, c), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = x[:, i : i + ho * stride : stride, j : j + wo * stride : stride, :]
    return cols


def _scatter_cols(dcols: np.ndarray, x_shape: tuple, stride: int, pad: int) -> np.ndarray:
    """Adjoint of _gather_cols: scatter-add (B,Ho,Wo,KH,KW,C) back onto x."""
    b, h, w, c = x_shape
    _, ho, wo, kh, kw, _ = dcols.shape
    dxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + ho * stride : stride, j : j + wo * stride : stride, :] += dcols[:, :, :, i, j, :]
    if pad:
        return dxp[:, pad : pad + h, pad : pad + w, :]
    return dxp


def conv2d_forward(x, w, stride, pad):
    kh, kw, cin, cout = w.shape
    cols = _gather_cols(x, kh, kw, stride, pad)
    b, ho, wo = cols.shape[:3]
    y = cols.reshape(b * ho * wo, kh * kw * cin) @ w.reshape(kh * kw * cin, cout)
    return y.reshape(b, ho, wo, cout)


def conv2d_backward_input(dy, w, x_shape, stride, pad):
    kh, kw, cin, cout = w.shape
    b, ho, wo, _ = dy.shape
    dcols = dy.reshape(b * ho * wo, cout) @ w.reshape(kh * kw * cin, cout).T
    return _scatter_cols(dcols.reshape(b, ho, wo, kh, kw, cin), x_shape, stride, pad)


def conv2d_backward_weight(dy, x, w_shape, stride, pad):
    kh, kw, cin, cout = w_shape
    cols = _gather_cols(x, kh, kw, stride, pad)
    b, ho, wo = cols.shape[:3]
    dw = cols.reshape(b * ho * wo, kh * kw * cin).T @ dy.reshape(b * ho * wo, cout)
    return dw.reshape(kh, kw, cin, cout)


def dwconv2d_forward(x, w, stride, pad):
    kh, kw, _ = w.shape
    cols = _gather_cols(x, kh, kw, stride, pad)
    return np.einsum("bhwijc,ijc->bhwc", cols, w)


def dwconv2d_backward_input(dy, w, x_shape, stride, pad):
    dcols = np.einsum("bhwc,ijc->bhwijc", dy, w)
    return _scatter_cols(dcols, x_shape, stride, pad)


def dwconv2d_backward_weight(dy, x, w_shape, stride, pad):
    kh, kw, _ = w_shape
    cols = _gather_cols(x, kh, kw, stride, pad)
    return np.einsum("bhwijc,bhwc->ijc", cols, dy)


def maxpool2_forward(x):
    """2x2/stride-2 max pool. Returns (y, idx) where idx selects the first
    maximum among candidates ordered (0,0),(0,1),(1,0),(1,1)."""
    b, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    xr = x.reshape(b, ho, 2, wo, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, ho, wo, 4, c)
    idx = xr.argmax(axis=3)
    y = np.take_along_axis(xr, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return y, idx.astype(np.int8)


def maxpool2_backward(dy, idx, x_shape):
    b, h, w, c = x_shape
    ho, wo = h // 2, w // 2
    d4 = np.zeros((b, ho, wo, 4, c), dtype=dy.dtype)
    np.put_along_axis(d4, idx.astype(np.int64)[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
    return d4.reshape(b, ho, wo, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, h, w, c)
