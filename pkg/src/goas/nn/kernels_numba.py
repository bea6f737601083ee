"""Numba-jitted convolution and pooling kernels.

Signature-compatible with kernels_numpy. Loops are arranged so every prange
worker owns a disjoint output slice: results are deterministic regardless of
thread scheduling. fastmath stays off for the same reason.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_JIT = dict(parallel=True, fastmath=False, cache=True)


@njit(**_JIT)
def _conv2d_forward(x, w, stride, pad):
    b, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((b, ho, wo, cout), dtype=x.dtype)
    for bi in prange(b):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for i in range(kh):
                    ih = ih0 + i
                    if ih < 0 or ih >= h:
                        continue
                    for j in range(kw):
                        iw = iw0 + j
                        if iw < 0 or iw >= wd:
                            continue
                        for ci in range(cin):
                            v = x[bi, ih, iw, ci]
                            for co in range(cout):
                                out[bi, oh, ow, co] += v * w[i, j, ci, co]
    return out


@njit(**_JIT)
def _conv2d_backward_input(dy, w, b, h, wd, cin, stride, pad):
    kh, kw, _, cout = w.shape
    ho, wo = dy.shape[1], dy.shape[2]
    dx = np.zeros((b, h, wd, cin), dtype=dy.dtype)
    for bi in prange(b):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for i in range(kh):
                    ih = ih0 + i
                    if ih < 0 or ih >= h:
                        continue
                    for j in range(kw):
                        iw = iw0 + j
                        if iw < 0 or iw >= wd:
                            continue
                        for ci in range(cin):
                            acc = dy.dtype.type(0.0)
                            for co in range(cout):
                                acc += dy[bi, oh, ow, co] * w[i, j, ci, co]
                            dx[bi, ih, iw, ci] += acc
    return dx


@njit(**_JIT)
def _conv2d_backward_weight(dy, x, kh, kw, cin, cout, stride, pad):
    b, h, wd, _ = x.shape
    ho, wo = dy.shape[1], dy.shape[2]
    dw = np.zeros((kh, kw, cin, cout), dtype=dy.dtype)
    for tap in prange(kh * kw):
        i = tap // kw
        j = tap % kw
        for bi in range(b):
            for oh in range(ho):
                ih = oh * stride - pad + i
                if ih < 0 or ih >= h:
                    continue
                for ow in range(wo):
                    iw = ow * stride - pad + j
                    if iw < 0 or iw >= wd:
                        continue
                    for ci in range(cin):
                        v = x[bi, ih, iw, ci]
                        for co in range(cout):
                            dw[i, j, ci, co] += v * dy[bi, oh, ow, co]
    return dw


@njit(**_JIT)
def _dwconv2d_forward(x, w, stride, pad):
    b, h, wd, c = x.shape
    kh, kw, _ = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((b, ho, wo, c), dtype=x.dtype)
    for bi in prange(b):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for i in range(kh):
                    ih = ih0 + i
                    if ih < 0 or ih >= h:
                        continue
                    for j in range(kw):
                        iw = iw0 + j
                        if iw < 0 or iw >= wd:
                            continue
                        for ci in range(c):
                            out[bi, oh, ow, ci] += x[bi, ih, iw, ci] * w[i, j, ci]
    return out


@njit(**_JIT)
def _dwconv2d_backward_input(dy, w, b, h, wd, c, stride, pad):
    kh, kw, _ = w.shape
    ho, wo = dy.shape[1], dy.shape[2]
    dx = np.zeros((b, h, wd, c), dtype=dy.dtype)
    for bi in prange(b):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for i in range(kh):
                    ih = ih0 + i
                    if ih < 0 or ih >= h:
                        continue
                    for j in range(kw):
                        iw = iw0 + j
                        if iw < 0 or iw >= wd:
                            continue
                        for ci in range(c):
                            dx[bi, ih, iw, ci] += dy[bi, oh, ow, ci] * w[i, j, ci]
    return dx


@njit(**_JIT)
def _dwconv2d_backward_weight(dy, x, kh, kw, c, stride, pad):
    b, h, wd, _ = x.shape
    ho, wo = dy.shape[1], dy.shape[2]
    dw = np.zeros((kh, kw, c), dtype=dy.dtype)
    for tap in prange(kh * kw):
        i = tap // kw
        j = tap % kw
        for bi in range(b):
            for oh in range(ho):
                ih = oh * stride - pad + i
                if ih < 0 or ih >= h:
                    continue
                for ow in range(wo):
                    iw = ow * stride - pad + j
                    if iw < 0 or iw >= wd:
                        continue
                    for ci in range(c):
                        dw[i, j, ci] += x[bi, ih, iw, ci] * dy[bi, oh, ow, ci]
    return dw


@njit(**_JIT)
def _maxpool2_forward(x):
    b, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    y = np.empty((b, ho, wo, c), dtype=x.dtype)
    idx = np.empty((b, ho, wo, c), dtype=np.int8)
    for bi in prange(b):
        for oh in range(ho):
            for ow in range(wo):
                for ci in range(c):
                    best = x[bi, 2 * oh, 2 * ow, ci]
                    k = 0
                    # candidate order matches the numpy backend: (0,0),(0,1),(1,0),(1,1)
                    for t in range(1, 4):
                        v = x[bi, 2 * oh + t // 2, 2 * ow + t % 2, ci]
                        if v > best:
                            best = v
                            k = t
                    y[bi, oh, ow, ci] = best
                    idx[bi, oh, ow, ci] = k
    return y, idx


@njit(**_JIT)
def _maxpool2_backward(dy, idx, b, h, w, c):
    ho, wo = h // 2, w // 2
    dx = np.zeros((b, h, w, c), dtype=dy.dtype)
    for bi in prange(b):
        for oh in range(ho):
            for ow in range(wo):
                for ci in range(c):
                    k = idx[bi, oh, ow, ci]
                    dx[bi, 2 * oh + k // 2, 2 * ow + k % 2, ci] = dy[bi, oh, ow, ci]
    return dx


def conv2d_forward(x, w, stride, pad):
    return _conv2d_forward(np.ascontiguousarray(x), np.ascontiguousarray(w), stride, pad)


def conv2d_backward_input(dy, w, x_shape, stride, pad):
    b, h, wd, cin = x_shape
    return _conv2d_backward_input(np.ascontiguousarray(dy), np.ascontiguousarray(w), b, h, wd, cin, stride, pad)


def conv2d_backward_weight(dy, x, w_shape, stride, pad):
    kh, kw, cin, cout = w_shape
    return _conv2d_backward_weight(np.ascontiguousarray(dy), np.ascontiguousarray(x), kh, kw, cin, cout, stride, pad)


def dwconv2d_forward(x, w, stride, pad):
    return _dwconv2d_forward(np.ascontiguousarray(x), np.ascontiguousarray(w), stride, pad)


def dwconv2d_backward_input(dy, w, x_shape, stride, pad):
    b, h, wd, c = x_shape
    return _dwconv2d_backward_input(np.ascontiguousarray(dy), np.ascontiguousarray(w), b, h, wd, c, stride, pad)


def dwconv2d_backward_weight(dy, x, w_shape, stride, pad):
    kh, kw, c = w_shape
    return _dwconv2d_backward_weight(np.ascontiguousarray(dy), np.ascontiguousarray(x), kh, kw, c, stride, pad)


def maxpool2_forward(x):
    return _maxpool2_forward(np.ascontiguousarray(x))


def maxpool2_backward(dy, idx, x_shape):
    b, h, w, c = x_shape
    return _maxpool2_backward(np.ascontiguousarray(dy), idx, b, h, w, c)
