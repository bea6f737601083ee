"""Central-finite-difference gradient checking against the autodiff engine."""

from __future__ import annotations

import numpy as np

from goas.nn import autodiff as ad
from goas.nn.autodiff import Tensor


def gradcheck(make_loss, arrays, eps=1e-5, max_coords=32, seed=0):
    """Compare analytic gradients of a scalar-valued graph builder against
    central differences, in float64, over a sampled subset of coordinates.

    make_loss receives {name: Tensor} and must return a scalar Tensor.
    Returns the maximum relative error across all checked coordinates.
    """
    arrays = {k: np.asarray(v, dtype=np.float64).copy() for k, v in arrays.items()}
    tensors = {k: Tensor(v.copy(), requires_grad=True) for k, v in arrays.items()}
    loss = make_loss(tensors)
    loss.backward()

    def value_at() -> float:
        with ad.no_grad():
            return float(make_loss({k: Tensor(v) for k, v in arrays.items()}).data)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, base in arrays.items():
        grad = tensors[name].grad
        analytic = np.zeros_like(base) if grad is None else np.asarray(grad)
        flat = base.reshape(-1)
        coords = rng.choice(flat.size, size=min(max_coords, flat.size), replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            f_plus = value_at()
            flat[c] = orig - eps
            f_minus = value_at()
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = analytic.reshape(-1)[c]
            scale = max(abs(a), abs(numeric))
            if scale < 1e-6:
                continue
            worst = max(worst, abs(a - numeric) / scale)
    return worst
