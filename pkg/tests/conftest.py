import numpy as np
import pytest

from goas import synth
from goas.manifest import load_manifest


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """2 sensors x 3 mediums, 3 videos per combo, 2 frames of 96x96.
    Small enough to regenerate in a couple of seconds, big enough to crop
    64x64 patches from."""
    out = tmp_path_factory.mktemp("tinyset")
    spec = synth.build_noise_spec(n_c=2, n_m=3, frame_size=96, amplitude=0.08, seed=11)
    layout = synth.SplitLayout(train_videos=2, test_videos=1)
    manifest = synth.generate_synthetic_dataset(spec, counts=3, frames_per_video=2, out_dir=out, layout=layout)
    return out, manifest, spec


@pytest.fixture()
def tiny_manifest(tiny_dataset):
    out, _, _ = tiny_dataset
    return load_manifest(out / "manifest.jsonl")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
