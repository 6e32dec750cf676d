from pathlib import Path

import numpy as np
import pytest

from src.errors import ConfigError, MissingFileError
from src.imaging import SceneEntry, SequenceManifest, read_manifest, save_image, write_manifest


def _write_frames(root, scene, n, size=(4, 5)):
    rel = []
    for k in range(n):
        name = Path(scene) / f"frame_{k:04d}.png"
        save_image(root / name, np.full(size, k / 10), "png16")
        rel.append(name)
    return rel


def test_write_then_read(tmp_path):
    scenes = [SceneEntry("a", _write_frames(tmp_path, "a", 3)), SceneEntry("b", _write_frames(tmp_path, "b", 3))]
    path = write_manifest(tmp_path / "manifest.tsv", SequenceManifest(scenes, "png16", tmp_path, {"sigma_s": "0.0025"}))
    text = path.read_text()
    assert text.startswith("# format=png16\n# sigma_s=0.0025\n")

    manifest = read_manifest(path)
    assert [s.scene_id for s in manifest] == ["a", "b"]
    assert manifest.header["sigma_s"] == "0.0025"
    stack = manifest.load_scene(manifest.scenes[1])
    assert stack.shape == (4, 5, 3)
    assert stack[0, 0, 2] == pytest.approx(0.2, abs=1e-5)


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingFileError):
        read_manifest(tmp_path / "manifest.tsv")


def test_malformed_line(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text("# format=png16\nscene_without_frames\n")
    with pytest.raises(ConfigError):
        read_manifest(path)


def test_validation_errors_are_collected(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text(
        "a\tframe_0002.png,frame_0001.png\n"
        "a\tframe_0003.png\n"
    )
    with pytest.raises(ConfigError) as excinfo:
        read_manifest(path)
    errors = "\n".join(excinfo.value.errors)
    assert "duplicate scene id" in errors
    assert "not strictly increasing" in errors
    assert "missing frames" in errors

    path.write_text("a\tframe_0001.png,frame_0002.png\n")
    manifest = read_manifest(path, check_files=False)
    assert len(manifest) == 1 and len(manifest.scenes[0]) == 2


def test_frames_of_different_size(tmp_path):
    save_image(tmp_path / "f_0.png", np.zeros((4, 4)), "png16")
    save_image(tmp_path / "f_1.png", np.zeros((5, 4)), "png16")
    path = tmp_path / "m.tsv"
    path.write_text("s\tf_0.png,f_1.png\n")
    manifest = read_manifest(path)
    with pytest.raises(ConfigError):
        manifest.load_scene(manifest.scenes[0])
