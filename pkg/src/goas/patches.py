"""Frame loading and random patch extraction.

Frames live as 8-bit RGB PNGs in per-video directories. Decoded frames are
cached in memory (and optionally on disk under $GOAS_CACHE) because training
re-crops the same frames thousands of times.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from goas.errors import ValidationError
from goas.manifest import VideoRecord


@dataclass
class PatchBatch:
    images: np.ndarray  # (B, H, W, 3) in [0, 1]
    sensor_onehot: np.ndarray  # (B, n_c)
    medium_onehot: np.ndarray  # (B, n_m)
    source_video_ids: list[str]

    def __len__(self) -> int:
        return self.images.shape[0]

    def validate(self, strict_onehot: bool = True) -> None:
        """strict_onehot enforces {0,1} entries (batches drawn from real
        data); pass False only for prototype-interpolation tooling."""
        b = len(self)
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise ValidationError(f"images must be (B, H, W, 3); got {self.images.shape}")
        if self.images.shape[1] != self.images.shape[2]:
            raise ValidationError("patches must be square")
        if self.images.min() < 0.0 or self.images.max() > 1.0:
            raise ValidationError("patch values must lie in [0, 1]")
        for name, oh in (("sensor", self.sensor_onehot), ("medium", self.medium_onehot)):
            if oh.shape[0] != b:
                raise ValidationError(f"{name}_onehot batch dim mismatch")
            if not np.allclose(oh.sum(axis=1), 1.0):
                raise ValidationError(f"{name}_onehot rows must sum to 1")
            if strict_onehot and not np.isin(oh, (0.0, 1.0)).all():
                raise ValidationError(f"{name}_onehot entries must be exactly 0 or 1")
        if len(self.source_video_ids) != b:
            raise ValidationError("source_video_ids length mismatch")

    def take(self, indices) -> "PatchBatch":
        return PatchBatch(
            images=self.images[indices],
            sensor_onehot=self.sensor_onehot[indices],
            medium_onehot=self.medium_onehot[indices],
            source_video_ids=[self.source_video_ids[i] for i in np.atleast_1d(indices)],
        )


def concat_batches(batches: list[PatchBatch]) -> PatchBatch:
    return PatchBatch(
        images=np.concatenate([b.images for b in batches]),
        sensor_onehot=np.concatenate([b.sensor_onehot for b in batches]),
        medium_onehot=np.concatenate([b.medium_onehot for b in batches]),
        source_video_ids=[vid for b in batches for vid in b.source_video_ids],
    )


def onehot(index: int, width: int) -> np.ndarray:
    v = np.zeros(width)
    v[index] = 1.0
    return v


def list_frames(video_dir: str | Path) -> list[Path]:
    frames = sorted(Path(video_dir).glob("frame_*.png"))
    if not frames:
        raise ValidationError(f"no frames found under {video_dir}")
    return frames


def load_frame(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    except OSError as exc:
        raise ValidationError(f"unreadable frame {path}: {exc}") from exc
    return arr / 255.0


class FrameCache:
    """Per-video stacked frame arrays, memoized in RAM; persisted to
    $GOAS_CACHE (if set) keyed by the video directory path."""

    def __init__(self, cache_dir: str | Path | None = None):
        env = os.environ.get("GOAS_CACHE")
        self.cache_dir = Path(cache_dir) if cache_dir else (Path(env) if env else None)
        self._mem: dict[str, np.ndarray] = {}

    def _disk_path(self, video_dir: str) -> Path | None:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha1(str(Path(video_dir).resolve()).encode()).hexdigest()[:16]
        return self.cache_dir / f"frames_{digest}.npy"

    def frames(self, video_dir: str | Path) -> np.ndarray:
        key = str(video_dir)
        if key in self._mem:
            return self._mem[key]
        disk = self._disk_path(key)
        if disk is not None and disk.exists():
            stack = np.load(disk)
        else:
            stack = np.stack([load_frame(p) for p in list_frames(video_dir)])
            if disk is not None:
                disk.parent.mkdir(parents=True, exist_ok=True)
                np.save(disk, stack)
        self._mem[key] = stack
        return stack


_default_cache = FrameCache()


def sample_patches(
    record: VideoRecord,
    frame_index: int,
    count: int,
    size: int,
    rng_seed: int,
    *,
    n_c: int,
    n_m: int,
    cache: FrameCache | None = None,
) -> PatchBatch:
    """Crop `count` uniformly-placed size x size patches from one frame.
    All crops stay fully inside the frame; coordinates are a pure function
    of rng_seed."""
    cache = cache or _default_cache
    frames = cache.frames(record.path)
    if not 0 <= frame_index < frames.shape[0]:
        raise ValidationError(f"frame index {frame_index} out of range for {record.id} ({frames.shape[0]} frames)")
    frame = frames[frame_index]
    h, w = frame.shape[:2]
    if size > h or size > w:
        raise ValidationError(f"patch size {size} exceeds frame size {h}x{w} for {record.id}")
    rng = np.random.default_rng(rng_seed)
    ys = rng.integers(0, h - size + 1, size=count)
    xs = rng.integers(0, w - size + 1, size=count)
    images = np.stack([frame[y : y + size, x : x + size] for y, x in zip(ys, xs)])
    return PatchBatch(
        images=images,
        sensor_onehot=np.tile(onehot(record.sensor_id, n_c), (count, 1)),
        medium_onehot=np.tile(onehot(record.medium_id, n_m), (count, 1)),
        source_video_ids=[record.id] * count,
    )


def save_patch_pool(batch: PatchBatch, path: str | Path) -> None:
    np.savez_compressed(
        path,
        images=batch.images.astype(np.float32),
        sensor_onehot=batch.sensor_onehot,
        medium_onehot=batch.medium_onehot,
        source_video_ids=np.array(batch.source_video_ids),
    )


def load_patch_pool(path: str | Path) -> PatchBatch:
    data = np.load(path)
    return PatchBatch(
        images=data["images"],
        sensor_onehot=data["sensor_onehot"],
        medium_onehot=data["medium_onehot"],
        source_video_ids=[str(v) for v in data["source_video_ids"]],
    )
