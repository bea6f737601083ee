import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from goas.errors import ValidationError
from goas.manifest import VideoRecord
from goas.patches import FrameCache, PatchBatch, concat_batches, load_patch_pool, sample_patches, save_patch_pool


def _make_video(tmp_path, h, w, frames=1, name="vid"):
    vdir = tmp_path / name
    vdir.mkdir()
    rng = np.random.default_rng(0)
    for f in range(frames):
        arr = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        Image.fromarray(arr).save(vdir / f"frame_{f:05d}.png")
    return VideoRecord(id=name, path=str(vdir), sensor_id=1, medium_id=2, object_id=0, background_id=0, split="train")


def test_twenty_patches_within_bounds(tmp_path):
    rec = _make_video(tmp_path, 270, 480)  # 1080p aspect at quarter scale
    batch = sample_patches(rec, 0, count=20, size=64, rng_seed=5, n_c=3, n_m=3)
    assert batch.images.shape == (20, 64, 64, 3)
    batch.validate()
    assert batch.sensor_onehot.argmax(axis=1).tolist() == [1] * 20
    assert batch.medium_onehot.argmax(axis=1).tolist() == [2] * 20


def test_exact_size_frame_forces_single_crop(tmp_path):
    rec = _make_video(tmp_path, 64, 64)
    batch = sample_patches(rec, 0, count=20, size=64, rng_seed=0, n_c=3, n_m=3)
    assert all(np.array_equal(batch.images[0], img) for img in batch.images)


def test_seed_determinism(tmp_path):
    rec = _make_video(tmp_path, 100, 120)
    a = sample_patches(rec, 0, count=8, size=32, rng_seed=9, n_c=3, n_m=3)
    b = sample_patches(rec, 0, count=8, size=32, rng_seed=9, n_c=3, n_m=3)
    assert np.array_equal(a.images, b.images)
    c = sample_patches(rec, 0, count=8, size=32, rng_seed=10, n_c=3, n_m=3)
    assert not np.array_equal(a.images, c.images)


def test_patch_larger_than_frame(tmp_path):
    rec = _make_video(tmp_path, 32, 32)
    with pytest.raises(ValidationError, match="exceeds frame size"):
        sample_patches(rec, 0, count=1, size=64, rng_seed=0, n_c=3, n_m=3)


def test_bad_frame_index(tmp_path):
    rec = _make_video(tmp_path, 64, 64, frames=2)
    with pytest.raises(ValidationError, match="out of range"):
        sample_patches(rec, 5, count=1, size=16, rng_seed=0, n_c=3, n_m=3)


@settings(max_examples=25, deadline=None)
@given(h=st.integers(16, 70), w=st.integers(16, 70), size=st.integers(4, 16), seed=st.integers(0, 2**31))
def test_patches_never_leave_frame(tmp_path_factory, h, w, size, seed):
    tmp = tmp_path_factory.mktemp("fuzz")
    vdir = tmp / "v"
    vdir.mkdir()
    # encode pixel coordinates in the channels so crops betray their origin
    yy = np.arange(h, dtype=np.uint8)[:, None].repeat(w, axis=1)
    xx = np.arange(w, dtype=np.uint8)[None, :].repeat(h, axis=0)
    arr = np.stack([yy, xx, np.zeros_like(yy)], axis=-1)
    Image.fromarray(arr).save(vdir / "frame_00000.png")
    rec = VideoRecord(id="v", path=str(vdir), sensor_id=0, medium_id=0, object_id=0, background_id=0, split="train")
    batch = sample_patches(rec, 0, count=5, size=size, rng_seed=seed, n_c=1, n_m=1, cache=FrameCache())
    ys = (batch.images[:, 0, 0, 0] * 255).round()
    xs = (batch.images[:, 0, 0, 1] * 255).round()
    assert (ys + size <= h).all() and (xs + size <= w).all()


def test_pool_roundtrip(tmp_path):
    rec = _make_video(tmp_path, 64, 64)
    batch = sample_patches(rec, 0, count=4, size=16, rng_seed=0, n_c=3, n_m=3)
    save_patch_pool(batch, tmp_path / "pool.npz")
    loaded = load_patch_pool(tmp_path / "pool.npz")
    assert np.allclose(loaded.images, batch.images)
    assert loaded.source_video_ids == batch.source_video_ids


def test_concat_and_take(tmp_path):
    rec = _make_video(tmp_path, 64, 64)
    a = sample_patches(rec, 0, count=3, size=16, rng_seed=0, n_c=3, n_m=3)
    b = sample_patches(rec, 0, count=2, size=16, rng_seed=1, n_c=3, n_m=3)
    joined = concat_batches([a, b])
    assert len(joined) == 5
    sub = joined.take(np.array([0, 4]))
    assert len(sub) == 2


def test_disk_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("GOAS_CACHE", str(tmp_path / "cache"))
    rec = _make_video(tmp_path, 32, 32)
    cache = FrameCache()
    first = cache.frames(rec.path)
    cached_files = list((tmp_path / "cache").glob("frames_*.npy"))
    assert len(cached_files) == 1
    again = FrameCache().frames(rec.path)
    assert np.array_equal(first, again)


def test_onehot_soft_mixture_rejected(tmp_path):
    rec = _make_video(tmp_path, 64, 64)
    batch = sample_patches(rec, 0, count=2, size=16, rng_seed=0, n_c=3, n_m=3)
    batch.sensor_onehot[0] = [0.4, 0.4, 0.2]
    with pytest.raises(ValidationError, match="exactly 0 or 1"):
        batch.validate()
