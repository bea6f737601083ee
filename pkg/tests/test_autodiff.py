"""Gradient checks for every autodiff op, plus graph-engine behavior."""

import numpy as np
import pytest
from util_gradcheck import gradcheck

from goas.nn import autodiff as ad
from goas.nn.autodiff import Tensor

TOL = 1e-3


def test_elementwise_chain(rng):
    arrays = {"x": rng.standard_normal((4, 5)) + 0.1, "y": rng.standard_normal((4, 5))}

    def build(t):
        return ad.mean(ad.mul(ad.add(t["x"], t["y"]), ad.tanh(t["x"])))

    assert gradcheck(build, arrays) < TOL


def test_broadcast_add_bias(rng):
    arrays = {"x": rng.standard_normal((3, 4, 4, 2)), "b": rng.standard_normal(2)}

    def build(t):
        return ad.mean(ad.mul(ad.add(t["x"], t["b"]), ad.add(t["x"], t["b"])))

    assert gradcheck(build, arrays) < TOL


def test_matmul_and_softmax_log(rng):
    arrays = {"a": rng.standard_normal((5, 3)), "w": rng.standard_normal((3, 4))}

    def build(t):
        p = ad.softmax(ad.matmul(t["a"], t["w"]))
        return ad.neg(ad.mean(ad.log(ad.clip_probs(p, 1e-7))))

    assert gradcheck(build, arrays) < TOL


def test_sigmoid_leaky_relu(rng):
    arrays = {"x": rng.standard_normal((6, 6)) + 0.05}

    def build(t):
        return ad.mean(ad.sigmoid(ad.leaky_relu(t["x"], 0.2)))

    assert gradcheck(build, arrays) < TOL


def test_conv2d_both_args(rng):
    arrays = {
        "x": rng.standard_normal((2, 6, 6, 3)),
        "w": rng.standard_normal((3, 3, 3, 4)) * 0.5,
    }

    def build(t):
        y = ad.conv2d(t["x"], t["w"], stride=1, pad=1)
        return ad.mean(ad.mul(y, y))

    assert gradcheck(build, arrays) < TOL


def test_conv2d_strided(rng):
    arrays = {
        "x": rng.standard_normal((2, 7, 7, 2)),
        "w": rng.standard_normal((3, 3, 2, 3)) * 0.5,
    }

    def build(t):
        y = ad.conv2d(t["x"], t["w"], stride=2, pad=1)
        return ad.mean(ad.tanh(y))

    assert gradcheck(build, arrays) < TOL


def test_depthwise_conv(rng):
    arrays = {"x": rng.standard_normal((2, 6, 6, 3)), "w": rng.standard_normal((3, 3, 3))}

    def build(t):
        y = ad.dwconv2d(t["x"], t["w"], stride=2, pad=1)
        return ad.mean(ad.mul(y, y))

    assert gradcheck(build, arrays) < TOL


def test_maxpool(rng):
    arrays = {"x": rng.standard_normal((2, 8, 8, 2))}

    def build(t):
        return ad.mean(ad.mul(ad.maxpool2(t["x"]), ad.maxpool2(t["x"])))

    assert gradcheck(build, arrays) < TOL


def test_instance_norm(rng):
    arrays = {"x": rng.standard_normal((2, 5, 5, 3))}

    def build(t):
        y = ad.instance_norm(t["x"])
        return ad.mean(ad.mul(y, ad.tanh(y)))

    assert gradcheck(build, arrays) < TOL


def test_concat_reshape_take_column(rng):
    arrays = {"a": rng.standard_normal((4, 3)), "b": rng.standard_normal((4, 2))}

    def build(t):
        joined = ad.concat([t["a"], t["b"]], axis=1)
        col = ad.take_column(joined, 4)
        return ad.mean(ad.mul(col, col))

    assert gradcheck(build, arrays) < TOL


def test_mean_hw_and_sum_axis(rng):
    arrays = {"x": rng.standard_normal((3, 4, 4, 5))}

    def build(t):
        pooled = ad.mean_hw(t["x"])
        return ad.mean(ad.sum_axis(ad.mul(pooled, pooled), axis=1))

    assert gradcheck(build, arrays) < TOL


def test_clip01_gradient_masks_outside():
    x = Tensor(np.array([-0.5, 0.25, 0.75, 1.5]), requires_grad=True)
    y = ad.mean(ad.clip01(x))
    y.backward()
    assert np.allclose(x.grad, [0.0, 0.25, 0.25, 0.0])


def test_shared_parent_accumulates():
    x = Tensor(np.array(3.0), requires_grad=True)
    y = ad.mul(x, x)
    y.backward()
    assert np.isclose(float(x.grad), 6.0)


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(3), requires_grad=True)
    with ad.no_grad():
        y = ad.mul(x, x)
    assert y._parents == () and not y.requires_grad


def test_frozen_parent_gets_no_grad():
    x = Tensor(np.ones(3), requires_grad=True)
    w = Tensor(np.ones(3), requires_grad=False)
    loss = ad.mean(ad.mul(x, w))
    loss.backward()
    assert x.grad is not None
    assert w.grad is None


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        ad.mul(x, x).backward()
