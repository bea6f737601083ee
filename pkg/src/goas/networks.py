"""Network definitions: generator, adversarial discriminator, sensor/medium
classifier, and the binary map baseline.

All images cross module boundaries in [0, 1] and are shifted to [-1, 1]
before the first convolution. No batch-statistics layers: every forward is
a pure per-sample function of its inputs (optional instance normalization
is per-sample too).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from goas.errors import ConfigError, ValidationError
from goas.nn import autodiff as ad
from goas.nn.autodiff import Tensor


@dataclass
class ArchConfig:
    n_c: int = 7
    n_m: int = 7
    patch_gan: int = 64
    patch_pad: int = 256
    gen_channels: tuple = (32, 32, 64, 64, 32, 32, 16)
    disc_channels: tuple = (16, 16, 32, 32, 64, 64, 64, 64, 64, 64)
    disc_fc: int = 128
    lab_channels: tuple = (16, 16, 16, 32, 32, 32, 64, 64, 64, 64, 64)
    lab_fc: int = 64
    pad_channels: tuple = (5, 8, 10, 13)
    pad_map_size: int = 32
    activation: str = "leaky_relu"
    leaky_slope: float = 0.2
    norm: str = "none"
    dtype: str = "float32"

    # dotted names used in human-editable config files
    _FILE_KEYS = {
        "gen.channels": "gen_channels",
        "disc.channels": "disc_channels",
        "disc.fc": "disc_fc",
        "lab.channels": "lab_channels",
        "lab.fc": "lab_fc",
        "pad.channels": "pad_channels",
        "pad.map_size": "pad_map_size",
        "activation": "activation",
        "norm": "norm",
    }

    def __post_init__(self):
        if self.activation != "leaky_relu":
            raise ConfigError(f"unsupported activation {self.activation!r}")
        if self.norm not in ("none", "instance"):
            raise ConfigError(f"unsupported norm {self.norm!r}")
        if self.pad_map_size not in (self.patch_pad, self.patch_pad // 8):
            raise ConfigError(
                f"pad.map_size must be {self.patch_pad} (full) or {self.patch_pad // 8} (downsampled); got {self.pad_map_size}"
            )
        for name in ("gen_channels", "disc_channels", "lab_channels", "pad_channels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.pad_channels) != 4:
            raise ConfigError("pad.channels needs exactly 4 entries (stem + 3 stages)")

    def np_dtype(self):
        return np.dtype(self.dtype)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        known = {f.name for f in fields(cls)}
        mapped = {}
        for key, value in d.items():
            name = cls._FILE_KEYS.get(key, key)
            if name not in known:
                raise ConfigError(f"unknown architecture key {key!r}")
            mapped[name] = tuple(value) if isinstance(value, list) else value
        return cls(**mapped)


@dataclass
class LabOutput:
    logits_c: Tensor
    logits_m: Tensor
    probs_c: Tensor
    probs_m: Tensor


@dataclass
class PadMap:
    map: Tensor  # (B, H', W') in [0, 1]


class Module:
    def __init__(self, prefix: str, cfg: ArchConfig, seed_tag: int, seed: int):
        self.prefix = prefix
        self.cfg = cfg
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, seed_tag]))
        self._params: dict[str, Tensor] = {}

    def _param(self, name: str, arr: np.ndarray) -> Tensor:
        t = Tensor(np.ascontiguousarray(arr, dtype=self.cfg.np_dtype()), requires_grad=True)
        self._params[f"{self.prefix}.{name}"] = t
        return t

    def _conv(self, name: str, cin: int, cout: int, k: int = 3, stride: int = 1, zero: bool = False):
        std = np.sqrt(2.0 / (k * k * cin))
        w = np.zeros((k, k, cin, cout)) if zero else self._rng.normal(0.0, std, (k, k, cin, cout))
        return {
            "w": self._param(f"{name}.w", w),
            "b": self._param(f"{name}.b", np.zeros(cout)),
            "stride": stride,
            "pad": k // 2,
        }

    def _dwconv(self, name: str, c: int, k: int = 3, stride: int = 1):
        std = np.sqrt(2.0 / (k * k))
        return {
            "w": self._param(f"{name}.w", self._rng.normal(0.0, std, (k, k, c))),
            "b": self._param(f"{name}.b", np.zeros(c)),
            "stride": stride,
            "pad": k // 2,
        }

    def _fc(self, name: str, cin: int, cout: int, zero: bool = False):
        std = np.sqrt(2.0 / cin)
        w = np.zeros((cin, cout)) if zero else self._rng.normal(0.0, std, (cin, cout))
        return {"w": self._param(f"{name}.w", w), "b": self._param(f"{name}.b", np.zeros(cout))}

    def _act(self, x: Tensor) -> Tensor:
        if self.cfg.norm == "instance":
            x = ad.instance_norm(x)
        return ad.leaky_relu(x, self.cfg.leaky_slope)

    def _conv_apply(self, layer, x: Tensor, depthwise: bool = False) -> Tensor:
        op = ad.dwconv2d if depthwise else ad.conv2d
        return ad.add(op(x, layer["w"], layer["stride"], layer["pad"]), layer["b"])

    def _cast(self, images) -> Tensor:
        if isinstance(images, Tensor):
            return images
        return ad.as_tensor(np.ascontiguousarray(images, dtype=self.cfg.np_dtype()))

    def params(self) -> dict[str, Tensor]:
        return dict(self._params)

    def set_trainable(self, flag: bool) -> None:
        for t in self._params.values():
            t.requires_grad = flag

    def param_count(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def assert_finite(self) -> None:
        for name, t in self._params.items():
            if not np.isfinite(t.data).all():
                raise ValidationError(f"parameter {name} contains non-finite values")


def _shift(x: Tensor) -> Tensor:
    return ad.affine(x, 2.0, -1.0)


class GoGen(Module):
    """Residual generator: input image plus conditioning channels in, additive
    low-energy noise out. A zero-initialized final layer makes it the identity
    at the start of training."""

    def __init__(self, cfg: ArchConfig, seed: int, cond_channels: int = 2):
        super().__init__("gen", cfg, seed_tag=0, seed=seed)
        self.cond_channels = cond_channels
        chans = [3 + cond_channels, *cfg.gen_channels]
        self.convs = [self._conv(f"conv{i + 1}", chans[i], chans[i + 1]) for i in range(len(cfg.gen_channels))]
        self.final = self._conv(f"conv{len(chans)}", chans[-1], 3, zero=True)

    def forward_channels(self, images, cond: Tensor) -> Tensor:
        images = self._cast(images)
        x = ad.concat([_shift(images), cond], axis=-1)
        for layer in self.convs:
            x = self._act(self._conv_apply(layer, x))
        delta = ad.tanh(self._conv_apply(self.final, x))
        return ad.clip01(ad.add(images, delta))

    def forward(self, images, sensor_noise: Tensor, medium_noise: Tensor) -> Tensor:
        if self.cond_channels != 2:
            raise ValidationError("this generator expects full conditioning stacks, not selected noise maps")
        b = sensor_noise.shape[0]
        h = sensor_noise.shape[1]
        cond = ad.concat(
            [ad.reshape(sensor_noise, (b, h, h, 1)), ad.reshape(medium_noise, (b, h, h, 1))],
            axis=-1,
        )
        return self.forward_channels(images, cond)


class GoDisc(Module):
    """Real-spoof vs synthesized-spoof discriminator: conv stack with stride-2
    downsampling on every other layer, two fully connected layers, softmax."""

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__("disc", cfg, seed_tag=1, seed=seed)
        chans = [3, *cfg.disc_channels]
        size = cfg.patch_gan
        self.convs = []
        for i in range(len(cfg.disc_channels)):
            stride = 2 if (i + 1) % 2 == 0 else 1
            self.convs.append(self._conv(f"conv{i + 1}", chans[i], chans[i + 1], stride=stride))
            size = (size + 2 - 3) // stride + 1
        self.flat_dim = size * size * chans[-1]
        self.fc1 = self._fc("fc1", self.flat_dim, cfg.disc_fc)
        self.fc2 = self._fc("fc2", cfg.disc_fc, 2, zero=True)

    def forward(self, images) -> Tensor:
        x = _shift(self._cast(images))
        for layer in self.convs:
            x = self._act(self._conv_apply(layer, x))
        x = ad.reshape(x, (x.shape[0], self.flat_dim))
        x = ad.leaky_relu(ad.add(ad.matmul(x, self.fc1["w"]), self.fc1["b"]), self.cfg.leaky_slope)
        logits = ad.add(ad.matmul(x, self.fc2["w"]), self.fc2["b"])
        return ad.softmax(logits)


# 1-based conv indices followed by 2x2 max pooling in the classifier trunk
_LAB_POOL_AFTER = (3, 6, 9)


class GoLab(Module):
    """Sensor and medium classifier: shared conv trunk with interleaved max
    pooling, global average pooling, then two independent fully connected
    heads."""

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__("lab", cfg, seed_tag=2, seed=seed)
        chans = [3, *cfg.lab_channels]
        self.convs = [self._conv(f"conv{i + 1}", chans[i], chans[i + 1]) for i in range(len(cfg.lab_channels))]
        trunk_out = chans[-1]
        self.head_c = [self._fc("head_c.fc1", trunk_out, cfg.lab_fc), self._fc("head_c.fc2", cfg.lab_fc, cfg.n_c, zero=True)]
        self.head_m = [self._fc("head_m.fc1", trunk_out, cfg.lab_fc), self._fc("head_m.fc2", cfg.lab_fc, cfg.n_m, zero=True)]

    def _head(self, head, feat: Tensor) -> Tensor:
        x = ad.leaky_relu(ad.add(ad.matmul(feat, head[0]["w"]), head[0]["b"]), self.cfg.leaky_slope)
        return ad.add(ad.matmul(x, head[1]["w"]), head[1]["b"])

    def forward(self, images) -> LabOutput:
        x = _shift(self._cast(images))
        for i, layer in enumerate(self.convs, start=1):
            x = self._act(self._conv_apply(layer, x))
            if i in _LAB_POOL_AFTER and i < len(self.convs) and x.shape[1] % 2 == 0 and x.shape[2] % 2 == 0:
                x = ad.maxpool2(x)
        feat = ad.mean_hw(x)
        logits_c = self._head(self.head_c, feat)
        logits_m = self._head(self.head_m, feat)
        return LabOutput(
            logits_c=logits_c,
            logits_m=logits_m,
            probs_c=ad.softmax(logits_c),
            probs_m=ad.softmax(logits_m),
        )


def golab_spoof_score(output: LabOutput) -> np.ndarray:
    """Anti-spoofing score: one minus the predicted live-medium probability."""
    return 1.0 - np.asarray(output.probs_m.data)[:, 0]


class GoPad(Module):
    """Binary-map baseline: lightweight trunk (depthwise + pointwise stages)
    producing a sigmoid map supervised toward constant 0 (live) / 1 (spoof)."""

    def __init__(self, cfg: ArchConfig, seed: int):
        super().__init__("pad", cfg, seed_tag=3, seed=seed)
        c0, c1, c2, c3 = cfg.pad_channels
        stage_stride = 1 if cfg.pad_map_size == cfg.patch_pad else 2
        self.stem = self._conv("stem", 3, c0)
        self.stages = []
        chans = [c0, c1, c2, c3]
        for i in range(3):
            self.stages.append(
                (
                    self._dwconv(f"stage{i + 1}.dw", chans[i], stride=stage_stride),
                    self._conv(f"stage{i + 1}.pw", chans[i], chans[i + 1], k=1),
                )
            )
        self.head = self._conv("head", c3, 1, k=1, zero=True)

    def forward(self, images) -> PadMap:
        images = self._cast(images)
        if images.shape[1] != self.cfg.patch_pad:
            raise ValidationError(f"expected {self.cfg.patch_pad}x{self.cfg.patch_pad} input, got {images.shape[1]}x{images.shape[2]}")
        x = self._act(self._conv_apply(self.stem, _shift(images)))
        for dw, pw in self.stages:
            x = self._act(self._conv_apply(dw, x, depthwise=True))
            x = self._act(self._conv_apply(pw, x))
        out = ad.sigmoid(self._conv_apply(self.head, x))
        return PadMap(map=ad.reshape(out, out.shape[:3]))


def pad_patch_scores(pad_map: PadMap) -> np.ndarray:
    return np.asarray(pad_map.map.data).mean(axis=(1, 2))


@dataclass
class NetworkSet:
    gen: GoGen
    disc: GoDisc
    lab: GoLab
    pad: GoPad
    arch: ArchConfig
    gen_cond_channels: int = 2

    def params(self) -> dict[str, Tensor]:
        out = {}
        for net in (self.gen, self.disc, self.lab, self.pad):
            out.update(net.params())
        return out

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.params()
        for name, t in params.items():
            if name not in state:
                raise ValidationError(f"checkpoint is missing parameter {name}")
            if state[name].shape != t.data.shape:
                raise ValidationError(f"parameter {name}: checkpoint shape {state[name].shape} != model {t.data.shape}")
            t.data = np.ascontiguousarray(state[name], dtype=self.arch.np_dtype())


def build_networks(arch: ArchConfig, seed: int, gen_cond_channels: int = 2) -> NetworkSet:
    return NetworkSet(
        gen=GoGen(arch, seed, cond_channels=gen_cond_channels),
        disc=GoDisc(arch, seed),
        lab=GoLab(arch, seed),
        pad=GoPad(arch, seed),
        arch=arch,
        gen_cond_channels=gen_cond_channels,
    )


def gopad_reference(arch: ArchConfig, seed: int = 0) -> GoPad:
    """Baseline-width twin of the map network (three times the kernels per
    layer); the shipped network must stay at or below a third of its
    parameter count."""
    ref = replace(arch, pad_channels=tuple(3 * c for c in arch.pad_channels))
    return GoPad(ref, seed)


def arch_to_json(arch: ArchConfig) -> str:
    return json.dumps(arch.to_dict(), sort_keys=True)


def arch_from_json(text: str) -> ArchConfig:
    return ArchConfig.from_dict(json.loads(text))
