"""Backend kernel equivalence and adjoint consistency.

The numba and numpy kernels must agree (up to reduction-order rounding), and
each backward kernel must be the true adjoint of its forward, which is
checked via <conv(x), dy> == <x, conv_bwd_input(dy)>.
"""

import numpy as np
import pytest

from goas.nn import kernels_numpy as knp

try:
    from goas.nn import kernels_numba as knb

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

CASES = [
    # (B, H, W, Cin, Cout, k, stride, pad)
    (2, 8, 8, 3, 5, 3, 1, 1),
    (3, 9, 7, 4, 2, 3, 2, 1),
    (2, 6, 6, 2, 3, 1, 1, 0),
    (1, 12, 12, 5, 4, 3, 2, 1),
]


def _rand_case(case, rng, dtype=np.float64):
    b, h, w, cin, cout, k, stride, pad = case
    x = rng.standard_normal((b, h, w, cin)).astype(dtype)
    wt = rng.standard_normal((k, k, cin, cout)).astype(dtype)
    return x, wt, stride, pad


@pytest.mark.parametrize("case", CASES)
def test_conv_adjoint_input(case, rng):
    x, w, stride, pad = _rand_case(case, rng)
    y = knp.conv2d_forward(x, w, stride, pad)
    dy = rng.standard_normal(y.shape)
    dx = knp.conv2d_backward_input(dy, w, x.shape, stride, pad)
    # adjoint identity for the map x -> conv(x, w): <conv(x), dy> == <x, dx>
    assert np.isclose((y * dy).sum(), (x * dx).sum(), rtol=1e-10)


@pytest.mark.parametrize("case", CASES)
def test_conv_adjoint_weight(case, rng):
    x, w, stride, pad = _rand_case(case, rng)
    y = knp.conv2d_forward(x, w, stride, pad)
    dy = rng.standard_normal(y.shape)
    dw = knp.conv2d_backward_weight(dy, x, w.shape, stride, pad)
    lhs = (y * dy).sum()
    rhs = (w * dw).sum()
    assert np.isclose(lhs, rhs, rtol=1e-10)


def test_conv_matches_direct_summation(rng):
    x, w, stride, pad = _rand_case((2, 5, 5, 2, 3, 3, 1, 1), rng)
    y = knp.conv2d_forward(x, w, stride, pad)
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    expected = np.zeros_like(y)
    for b in range(x.shape[0]):
        for oh in range(y.shape[1]):
            for ow in range(y.shape[2]):
                patch = xp[b, oh : oh + 3, ow : ow + 3, :]
                for co in range(y.shape[3]):
                    expected[b, oh, ow, co] = (patch * w[:, :, :, co]).sum()
    assert np.allclose(y, expected, atol=1e-12)


def test_maxpool_roundtrip(rng):
    x = rng.standard_normal((3, 8, 6, 4))
    y, idx = knp.maxpool2_forward(x)
    assert y.shape == (3, 4, 3, 4)
    assert np.allclose(y, x.reshape(3, 4, 2, 3, 2, 4).max(axis=(2, 4)))
    dy = rng.standard_normal(y.shape)
    dx = knp.maxpool2_backward(dy, idx, x.shape)
    assert np.isclose((y * dy).sum(), (x * dx).sum())


def test_maxpool_tie_breaks_first():
    x = np.zeros((1, 2, 2, 1))
    y, idx = knp.maxpool2_forward(x)
    assert idx.ravel()[0] == 0


def test_depthwise_adjoints(rng):
    x = rng.standard_normal((2, 8, 8, 3))
    w = rng.standard_normal((3, 3, 3))
    for stride in (1, 2):
        y = knp.dwconv2d_forward(x, w, stride, 1)
        dy = rng.standard_normal(y.shape)
        dx = knp.dwconv2d_backward_input(dy, w, x.shape, stride, 1)
        dw = knp.dwconv2d_backward_weight(dy, x, w.shape, stride, 1)
        assert np.isclose((y * dy).sum(), (x * dx).sum(), rtol=1e-10)
        assert np.isclose((y * dy).sum(), (w * dw).sum(), rtol=1e-10)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
class TestBackendAgreement:
    @pytest.mark.parametrize("case", CASES)
    def test_conv_forward_backward(self, case, rng):
        x, w, stride, pad = _rand_case(case, rng)
        y_np = knp.conv2d_forward(x, w, stride, pad)
        y_nb = knb.conv2d_forward(x, w, stride, pad)
        assert np.allclose(y_np, y_nb, rtol=1e-10, atol=1e-12)
        dy = np.random.default_rng(0).standard_normal(y_np.shape)
        assert np.allclose(
            knp.conv2d_backward_input(dy, w, x.shape, stride, pad),
            knb.conv2d_backward_input(dy, w, x.shape, stride, pad),
            rtol=1e-10,
            atol=1e-12,
        )
        assert np.allclose(
            knp.conv2d_backward_weight(dy, x, w.shape, stride, pad),
            knb.conv2d_backward_weight(dy, x, w.shape, stride, pad),
            rtol=1e-10,
            atol=1e-12,
        )

    def test_depthwise_and_pool(self, rng):
        x = rng.standard_normal((2, 8, 8, 3))
        w = rng.standard_normal((3, 3, 3))
        assert np.allclose(knp.dwconv2d_forward(x, w, 2, 1), knb.dwconv2d_forward(x, w, 2, 1))
        y_np, idx_np = knp.maxpool2_forward(x)
        y_nb, idx_nb = knb.maxpool2_forward(x)
        assert np.array_equal(y_np, y_nb)
        assert np.array_equal(idx_np, idx_nb)
        dy = rng.standard_normal(y_np.shape)
        assert np.array_equal(
            knp.maxpool2_backward(dy, idx_np, x.shape), knb.maxpool2_backward(dy, idx_nb, x.shape)
        )
