"""Procedural dataset with ground-truth injected noise.

Stands in for a physical capture campaign at desk scale: base textures
(object-like blobs over a background gradient) get a per-sensor fingerprint
plus a per-medium pattern added at a known amplitude, so recovery of either
component is measurable.

Sensor fingerprints are band-limited random fields (white noise low-pass
filtered, cutoff varying per sensor); medium patterns are periodic gratings
at distinct frequencies/orientations, echoing screen-recapture interference.
Both are zero-mean and unit-RMS so `amplitude` is the injected noise RMS.
Medium 0 is live: its pattern is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from goas.errors import ValidationError
from goas.manifest import DatasetManifest, VideoRecord, save_manifest

FRAME_NAME = "frame_%05d.png"


@dataclass
class SyntheticNoiseSpec:
    per_sensor_patterns: list[np.ndarray]
    per_medium_patterns: list[np.ndarray]
    amplitude: float
    seed: int

    def validate(self) -> None:
        if not 0.0 <= self.amplitude <= 0.5:
            raise ValidationError(f"amplitude must lie in [0, 0.5], got {self.amplitude}")
        if not self.per_sensor_patterns or not self.per_medium_patterns:
            raise ValidationError("pattern lists must be non-empty")
        if np.abs(self.per_medium_patterns[0]).max() != 0.0:
            raise ValidationError("medium pattern 0 (live) must be identically zero")
        for name, patterns in (("sensor", self.per_sensor_patterns), ("medium", self.per_medium_patterns)):
            for i, p in enumerate(patterns):
                if abs(float(p.mean())) > 1e-6:
                    raise ValidationError(f"{name} pattern {i} is not zero-mean (mean={p.mean():.2e})")

    @property
    def frame_size(self) -> int:
        return self.per_sensor_patterns[0].shape[0]


def _lowpass_field(size: int, cutoff: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS zero-mean random field with spectral support |f| < cutoff."""
    white = rng.standard_normal((size, size))
    spec = np.fft.fft2(white)
    f = np.fft.fftfreq(size)
    radius = np.hypot(f[:, None], f[None, :])
    # keep at least a couple of rings of modes, whatever the frame size
    spec[radius >= max(cutoff, 2.5 / size)] = 0.0
    spec[0, 0] = 0.0
    fieldmap = np.fft.ifft2(spec).real
    fieldmap -= fieldmap.mean()
    return fieldmap / fieldmap.std()


def _grating(size: int, freq: float, angle_deg: float, phase: float) -> np.ndarray:
    """Unit-RMS zero-mean sinusoidal grating."""
    theta = np.deg2rad(angle_deg)
    fx, fy = freq * np.cos(theta), freq * np.sin(theta)
    yy, xx = np.mgrid[0:size, 0:size]
    g = np.sin(2.0 * np.pi * (fx * xx + fy * yy) + phase)
    g -= g.mean()
    return g / g.std()


def build_noise_spec(n_c: int, n_m: int, frame_size: int, amplitude: float, seed: int) -> SyntheticNoiseSpec:
    """Construct spectrally separable ground-truth patterns: sensors occupy a
    low band (cutoffs spread per sensor), mediums a high band of gratings."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E4501]))
    sensors = [_lowpass_field(frame_size, 0.03 + 0.02 * s, rng) for s in range(n_c)]
    mediums = [np.zeros((frame_size, frame_size))]
    for m in range(1, n_m):
        freq = 0.18 + 0.04 * (m - 1)
        angle = 20.0 + 180.0 * (m - 1) / max(n_m - 1, 1)
        mediums.append(_grating(frame_size, freq, angle, phase=rng.uniform(0, 2 * np.pi)))
    spec = SyntheticNoiseSpec(sensors, mediums, amplitude=amplitude, seed=seed)
    spec.validate()
    return spec


def base_texture(object_id: int, background_id: int, frame_index: int, size: int, seed: int) -> np.ndarray:
    """Seeded object-like blobs over a background gradient; blobs drift a
    little per frame so consecutive frames resemble a video."""
    bg_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB6, background_id]))
    obj_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0B, object_id]))

    c0 = bg_rng.uniform(0.15, 0.75, size=3)
    c1 = bg_rng.uniform(0.15, 0.75, size=3)
    theta = bg_rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size] / size
    t = (np.cos(theta) * xx + np.sin(theta) * yy + 1.0) / 2.0
    img = c0[None, None, :] + t[:, :, None] * (c1 - c0)[None, None, :]

    n_blobs = int(obj_rng.integers(4, 8))
    centers = obj_rng.uniform(0.1, 0.9, size=(n_blobs, 2))
    radii = obj_rng.uniform(0.05, 0.2, size=n_blobs)
    colors = obj_rng.uniform(0.0, 1.0, size=(n_blobs, 3))
    vel = obj_rng.uniform(-0.01, 0.01, size=(n_blobs, 2))
    for i in range(n_blobs):
        cy, cx = centers[i] + vel[i] * frame_index
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        weight = np.exp(-d2 / (2 * radii[i] ** 2))
        img = img * (1 - weight[:, :, None]) + weight[:, :, None] * colors[i][None, None, :]
    return np.clip(img, 0.0, 1.0)


def render_frame(spec: SyntheticNoiseSpec, sensor_id: int, medium_id: int, object_id: int, background_id: int, frame_index: int) -> np.ndarray:
    """Frame = clip(texture + amp*sensor_pattern + amp*medium_pattern, 0, 1)."""
    size = spec.frame_size
    tex = base_texture(object_id, background_id, frame_index, size, spec.seed)
    noise = spec.amplitude * (spec.per_sensor_patterns[sensor_id] + spec.per_medium_patterns[medium_id])
    return np.clip(tex + noise[:, :, None], 0.0, 1.0)


def _quantize(frame: np.ndarray) -> np.ndarray:
    return (frame * 255.0 + 0.5).astype(np.uint8)


@dataclass
class SplitLayout:
    """How (object, background) labels are assigned to the video slots of
    each combination. Slots below train_videos draw from the train pools,
    the rest from disjoint test pools, so the standard split rule partitions
    the manifest with no mixed records."""

    train_videos: int
    test_videos: int
    train_backgrounds: int = 2
    test_backgrounds: int = 1

    def assign(self, slot: int) -> tuple[int, int, str]:
        if slot < self.train_videos:
            return slot, slot % self.train_backgrounds, "train"
        t = slot - self.train_videos
        return self.train_videos + t, self.train_backgrounds + t % self.test_backgrounds, "test"

    @property
    def train_object_set(self) -> set[int]:
        return set(range(self.train_videos))

    @property
    def train_background_set(self) -> set[int]:
        return set(range(self.train_backgrounds))


def generate_synthetic_dataset(
    spec: SyntheticNoiseSpec,
    counts: int | dict[tuple[int, int], int],
    frames_per_video: int,
    out_dir: str | Path,
    layout: SplitLayout | None = None,
) -> DatasetManifest:
    """Write PNG frames plus a manifest for every requested (sensor, medium)
    combination. `counts` is either videos-per-combination or an explicit
    coverage map {(sensor, medium): videos} for partial grids."""
    spec.validate()
    n_c, n_m = len(spec.per_sensor_patterns), len(spec.per_medium_patterns)
    if isinstance(counts, int):
        counts = {(s, m): counts for s in range(n_c) for m in range(n_m)}
    counts = {k: v for k, v in counts.items() if v > 0}
    if not counts:
        raise ValidationError("no (sensor, medium) combinations requested")
    for s, m in counts:
        if not (0 <= s < n_c and 0 <= m < n_m):
            raise ValidationError(f"combination ({s}, {m}) outside the pattern grid {n_c}x{n_m}")

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out_dir}: {exc}") from exc

    if layout is None:
        max_count = max(counts.values())
        n_train = max(1, int(round(max_count * 0.6)))
        layout = SplitLayout(train_videos=n_train, test_videos=max_count - n_train)

    records = []
    for (s, m) in sorted(counts):
        for slot in range(counts[(s, m)]):
            obj, bg, split = layout.assign(slot)
            vid = f"s{s}_m{m}_v{slot:03d}"
            vdir = out_dir / vid
            vdir.mkdir(exist_ok=True)
            for f in range(frames_per_video):
                frame = render_frame(spec, s, m, obj, bg, f)
                Image.fromarray(_quantize(frame)).save(vdir / (FRAME_NAME % f))
            records.append(
                VideoRecord(
                    id=vid,
                    path=str(vdir),
                    sensor_id=s,
                    medium_id=m,
                    object_id=obj,
                    background_id=bg,
                    split=split,
                )
            )

    manifest = DatasetManifest(
        records=records,
        n_c=n_c,
        n_m=n_m,
        metadata={
            "generator": "procedural",
            "amplitude": repr(spec.amplitude),
            "seed": str(spec.seed),
            "frame_size": str(spec.frame_size),
            "frames_per_video": str(frames_per_video),
        },
    )
    manifest.validate()
    save_manifest(manifest, out_dir / "manifest.jsonl", relative_to=out_dir)
    np.savez_compressed(
        out_dir / "ground_truth_patterns.npz",
        sensors=np.stack(spec.per_sensor_patterns),
        mediums=np.stack(spec.per_medium_patterns),
        amplitude=spec.amplitude,
        seed=spec.seed,
    )
    return manifest


def load_ground_truth(dataset_dir: str | Path) -> SyntheticNoiseSpec:
    data = np.load(Path(dataset_dir) / "ground_truth_patterns.npz")
    return SyntheticNoiseSpec(
        per_sensor_patterns=list(data["sensors"]),
        per_medium_patterns=list(data["mediums"]),
        amplitude=float(data["amplitude"]),
        seed=int(data["seed"]),
    )
