import numpy as np
import pytest

from src.imaging import ToyDatasetConfig, make_toy_dataset, make_toy_scenes, read_manifest, subsample_frames
from src.imaging.toydata import PATTERNS, make_scene


@pytest.mark.parametrize("pattern", PATTERNS)
def test_frames_are_rigid_translations(pattern):
    config = ToyDatasetConfig(size=24, frames=5, motion=2, pattern=pattern)
    for seed in range(4):
        frames, (vy, vx), name = make_scene(config, seed)
        assert name == pattern
        assert frames.shape == (24, 24, 5)
        assert frames.min() >= 0.0 and frames.max() <= 1.0
        for k in range(1, 5):
            dy, dx = k * vy, k * vx
            a = frames[max(dy, 0):24 + min(dy, 0), max(dx, 0):24 + min(dx, 0), 0]
            b = frames[max(-dy, 0):24 + min(-dy, 0), max(-dx, 0):24 + min(-dx, 0), k]
            assert np.array_equal(a, b)


def _overlap(a, b, dy, dx):
    n = a.shape[0]
    return (a[max(dy, 0):n + min(dy, 0), max(dx, 0):n + min(dx, 0)],
            b[max(-dy, 0):n + min(-dy, 0), max(-dx, 0):n + min(-dx, 0)])


def test_cross_correlation_recovers_the_motion():
    config = ToyDatasetConfig(size=64, frames=3, motion=2, pattern="blobs")
    candidates = [(dy, dx) for dy in range(-2, 3) for dx in range(-2, 3)]
    for seed in range(3):
        frames, velocity, _ = make_scene(config, seed)
        scores = {}
        for dy, dx in candidates:
            a, b = _overlap(frames[..., 0], frames[..., 1], dy, dx)
            scores[(dy, dx)] = np.corrcoef(a.ravel(), b.ravel())[0, 1]
        best = max(scores, key=scores.get)
        assert best == velocity
        assert max(abs(best[0]), abs(best[1])) <= config.motion
        assert scores[best] == pytest.approx(1.0, abs=1e-12)


def test_scenes_are_seeded():
    config = ToyDatasetConfig(num_scenes=3, size=16, frames=3, seed=4)
    first = make_toy_scenes(config)
    second = make_toy_scenes(config)
    assert [s for s, _ in first] == ["scene_0000", "scene_0001", "scene_0002"]
    assert all(np.array_equal(a, b) for (_, a), (_, b) in zip(first, second))


def test_dataset_round_trip(tmp_path):
    config = ToyDatasetConfig(num_scenes=2, size=16, frames=3, seed=1)
    manifest = make_toy_dataset(config, tmp_path)
    back = read_manifest(tmp_path / "manifest.tsv")
    assert len(back) == 2
    assert back.header["generator"] == "toy"
    stack = back.load_scene(back.scenes[0])
    expected = make_toy_scenes(config)[0][1]
    assert np.max(np.abs(stack - expected)) <= 0.5 / 65535 + 1e-12
    assert manifest.scenes[0].frames == back.scenes[0].frames


def test_pgm_dataset(tmp_path):
    make_toy_dataset(ToyDatasetConfig(num_scenes=1, size=8, frames=3, pixel_format="pgm8"), tmp_path)
    back = read_manifest(tmp_path / "manifest.tsv")
    assert back.pixel_format == "pgm8"
    assert back.scenes[0].frames[0].suffix == ".pgm"


def test_subsample_frames():
    frames = np.arange(9)[None, None, :] * np.ones((2, 2, 1))
    assert list(subsample_frames(frames, 2)[0, 0]) == [0, 2, 4, 6, 8]
    assert list(subsample_frames(frames, 3)[0, 0]) == [1, 4, 7]
    assert list(subsample_frames(frames, 1)[0, 0]) == list(range(9))
    with pytest.raises(ValueError):
        subsample_frames(frames, 0)


@pytest.mark.parametrize("kwargs", [{"frames": 4}, {"pattern": "noise"}, {"size": 0}, {"motion": -1}])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        ToyDatasetConfig(**kwargs)
