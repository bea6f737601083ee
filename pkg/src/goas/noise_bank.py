"""Learnable image-independent noise prototypes.

One single-channel map per sensor and per medium, applied identically to all
color channels when concatenated into the generator input. Selection is a
weighted sum over the bank, so gradients reach every prototype touched by
the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from goas.errors import ValidationError
from goas.nn import autodiff as ad
from goas.nn.autodiff import Tensor

INIT_SCHEMES = ("gaussian", "zeros")
DEFAULT_INIT_STD = 0.01


@dataclass
class SelectedNoise:
    sensor_noise: np.ndarray  # (H, W)
    medium_noise: np.ndarray  # (H, W)


class NoisePrototypeBank:
    """Trainable stacks of sensor and medium noise maps, each (n, H, W)."""

    def __init__(self, sensor_maps: np.ndarray, medium_maps: np.ndarray):
        if sensor_maps.ndim != 3 or medium_maps.ndim != 3:
            raise ValidationError("prototype stacks must be (n, H, W)")
        if sensor_maps.shape[1:] != medium_maps.shape[1:]:
            raise ValidationError("sensor and medium prototypes must share spatial size")
        if sensor_maps.shape[1] != sensor_maps.shape[2]:
            raise ValidationError("prototypes must be square")
        self.sensor_maps = Tensor(sensor_maps, requires_grad=True)
        self.medium_maps = Tensor(medium_maps, requires_grad=True)

    @property
    def n_c(self) -> int:
        return self.sensor_maps.shape[0]

    @property
    def n_m(self) -> int:
        return self.medium_maps.shape[0]

    @property
    def size(self) -> int:
        return self.sensor_maps.shape[1]

    def params(self) -> dict[str, Tensor]:
        return {"bank.sensor_maps": self.sensor_maps, "bank.medium_maps": self.medium_maps}

    def set_trainable(self, flag: bool) -> None:
        self.sensor_maps.requires_grad = flag
        self.medium_maps.requires_grad = flag

    def assert_finite(self) -> None:
        if not (np.isfinite(self.sensor_maps.data).all() and np.isfinite(self.medium_maps.data).all()):
            raise ValidationError("noise bank contains non-finite values")

    def select_batch(self, sensor_weights: np.ndarray, medium_weights: np.ndarray) -> tuple[Tensor, Tensor]:
        """Differentiable batched selection: (B, n) weights against the bank
        give (B, H, W) noise maps."""
        h = self.size
        nc = ad.reshape(
            ad.matmul(ad.as_tensor(sensor_weights), ad.reshape(self.sensor_maps, (self.n_c, h * h))),
            (-1, h, h),
        )
        nm = ad.reshape(
            ad.matmul(ad.as_tensor(medium_weights), ad.reshape(self.medium_maps, (self.n_m, h * h))),
            (-1, h, h),
        )
        return nc, nm


def select_prototype(bank: NoisePrototypeBank, sensor_weights, medium_weights) -> SelectedNoise:
    """Weighted sum over the bank for a single weight vector pair."""
    sensor_weights = np.asarray(sensor_weights, dtype=float)
    medium_weights = np.asarray(medium_weights, dtype=float)
    if sensor_weights.shape != (bank.n_c,):
        raise ValidationError(f"sensor weight length {sensor_weights.shape} != bank n_c {bank.n_c}")
    if medium_weights.shape != (bank.n_m,):
        raise ValidationError(f"medium weight length {medium_weights.shape} != bank n_m {bank.n_m}")
    if not (np.isfinite(sensor_weights).all() and np.isfinite(medium_weights).all()):
        raise ValidationError("selection weights must be finite")
    return SelectedNoise(
        sensor_noise=np.tensordot(sensor_weights, bank.sensor_maps.data, axes=1),
        medium_noise=np.tensordot(medium_weights, bank.medium_maps.data, axes=1),
    )


def init_bank(n_c: int, n_m: int, size: int, scheme: str = "gaussian", seed: int = 0, dtype=np.float32) -> NoisePrototypeBank:
    if min(n_c, n_m, size) < 1:
        raise ValidationError("n_c, n_m and size must all be >= 1")
    if scheme == "gaussian":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA]))
        sensor = rng.normal(0.0, DEFAULT_INIT_STD, size=(n_c, size, size))
        medium = rng.normal(0.0, DEFAULT_INIT_STD, size=(n_m, size, size))
    elif scheme == "zeros":
        sensor = np.zeros((n_c, size, size))
        medium = np.zeros((n_m, size, size))
    else:
        raise ValidationError(f"unknown init scheme {scheme!r}; expected one of {INIT_SCHEMES}")
    return NoisePrototypeBank(sensor.astype(dtype), medium.astype(dtype))


def fft_power_spectrum(arr: np.ndarray, log_scale: bool = False) -> np.ndarray:
    """Squared magnitude of the 2-D DFT with the zero-frequency bin centered.
    log_scale returns log(1 + P) for rendering."""
    arr = np.asarray(arr, dtype=float)
    if not np.isfinite(arr).all():
        raise ValidationError("input map contains non-finite values")
    power = np.abs(np.fft.fftshift(np.fft.fft2(arr))) ** 2
    return np.log1p(power) if log_scale else power


def spectral_correlation(map_a: np.ndarray, map_b: np.ndarray) -> float:
    """Pearson correlation between the two power spectra, DC bin excluded."""
    map_a, map_b = np.asarray(map_a), np.asarray(map_b)
    if map_a.shape != map_b.shape:
        raise ValidationError(f"shape mismatch: {map_a.shape} vs {map_b.shape}")
    h, w = map_a.shape
    mask = np.ones((h, w), dtype=bool)
    mask[h // 2, w // 2] = False
    pa = fft_power_spectrum(map_a)[mask]
    pb = fft_power_spectrum(map_b)[mask]
    sa, sb = pa.std(), pb.std()
    if sa == 0.0 or sb == 0.0:
        raise ValidationError("power spectrum has zero variance; correlation undefined")
    return float(((pa - pa.mean()) * (pb - pb.mean())).mean() / (sa * sb))
