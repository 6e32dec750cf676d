import json

import numpy as np
import pytest

from src.errors import ConfigError
from src.imaging import (
    NoiseParams,
    SceneEntry,
    SequenceManifest,
    ToyDatasetConfig,
    load_image,
    make_toy_dataset,
    read_manifest,
    save_image,
    write_manifest,
)
from src.model import ModelCheckpoint, build_network, default_config
from src.pipeline import (
    denoise_manifest,
    evaluate_manifests,
    noise_from_header,
    summarize,
    synth_noise_manifest,
    temporal_statistics,
    window_indices,
    write_reports,
)

NOISE = NoiseParams(2.5e-3, 1e-2)


def identity_checkpoint(mode="video3d", **overrides):
    """Parameters whose output is exactly the reference frame."""
    config = default_config(mode, **{"tau": 1, "width_scale": 0.1, "levels": 2, "convs_per_block": 1, **overrides})
    params = build_network(config, 0).snapshot()
    params["offset_out.w"][:] = 0.0
    params["offset_out.b"][:] = 0.0
    params["weight_out.w"][:] = 0.0
    params["weight_out.b"][:] = 0.0
    params["weight_out.b"][config.taps // 2] = 1.0
    return ModelCheckpoint(config, params)


@pytest.fixture
def clean(tmp_path):
    make_toy_dataset(ToyDatasetConfig(num_scenes=2, size=16, frames=3, seed=2), tmp_path / "clean")
    return read_manifest(tmp_path / "clean" / "manifest.tsv")


def test_window_indices_replicate_edges():
    assert window_indices(0, 5, 2) == [0, 0, 0, 1, 2]
    assert window_indices(4, 5, 1) == [3, 4, 4]
    assert window_indices(1, 1, 1) == [0, 0, 0]


def test_noise_from_header():
    assert noise_from_header({}) is None
    assert noise_from_header({"sigma_s": "0.001", "sigma_r": "0.02"}) == NoiseParams(0.001, 0.02)
    with pytest.raises(ConfigError):
        noise_from_header({"sigma_s": "-1", "sigma_r": "0.02"})


def test_synth_noise_records_its_parameters(tmp_path, clean):
    noisy = synth_noise_manifest(clean, tmp_path / "noisy", NOISE, seed=3)
    back = read_manifest(tmp_path / "noisy" / "manifest.tsv")
    assert noise_from_header(back.header) == NOISE
    assert back.header["generator"] == "toy"
    assert [s.scene_id for s in back] == [s.scene_id for s in clean]
    a = back.load_scene(back.scenes[0])
    b = clean.load_scene(clean.scenes[0])
    assert a.shape == b.shape and not np.allclose(a, b, atol=1e-3)
    again = synth_noise_manifest(clean, tmp_path / "noisy2", NOISE, seed=3)
    assert np.array_equal(again.load_scene(again.scenes[0]), noisy.load_scene(noisy.scenes[0]))


def test_identity_model_reproduces_its_input(tmp_path, clean):
    noisy = synth_noise_manifest(clean, tmp_path / "noisy", NOISE)
    out = denoise_manifest(noisy, identity_checkpoint(), tmp_path / "out")
    assert out.header["denoised_by"] == "video3d"
    for scene in noisy:
        assert np.array_equal(out.load_scene(out.scenes[[s.scene_id for s in out].index(scene.scene_id)]),
                              noisy.load_scene(scene))


def test_non_blind_model_needs_noise(tmp_path, clean):
    with pytest.raises(ConfigError):
        denoise_manifest(clean, identity_checkpoint(), tmp_path / "out")
    blind = identity_checkpoint(blind=True)
    assert len(denoise_manifest(clean, blind, tmp_path / "out", workers=2)) == 2


def test_colour_sequences_go_channel_by_channel(tmp_path):
    rng = np.random.default_rng(0)
    frames = []
    for k in range(3):
        frames.append(save_image(tmp_path / "rgb" / f"f_{k}.png", rng.random((8, 8, 3)), "png8").relative_to(tmp_path / "rgb"))
    manifest = SequenceManifest([SceneEntry("rgb", frames)], "png8", tmp_path / "rgb")
    write_manifest(tmp_path / "rgb" / "manifest.tsv", manifest)
    manifest = read_manifest(tmp_path / "rgb" / "manifest.tsv")
    with pytest.raises(ConfigError):
        denoise_manifest(manifest, identity_checkpoint(), tmp_path / "gray", NOISE)
    out = denoise_manifest(manifest, identity_checkpoint(), tmp_path / "out", NOISE, color=True)
    assert out.pixel_format == "png8"
    for k, rel in enumerate(out.scenes[0].frames):
        assert np.array_equal(load_image(out.resolve(rel)), load_image(tmp_path / "rgb" / frames[k]))


def test_evaluation_reports(tmp_path, clean):
    noisy = synth_noise_manifest(clean, tmp_path / "noisy", NOISE)
    reports = evaluate_manifests(clean, clean, noisy)
    assert len(reports) == 2
    assert all(r.psnr_db == 100.0 and r.noisy_psnr_db < 100.0 for r in reports)
    paths = write_reports(reports, tmp_path / "eval")
    lines = paths["tsv"].read_text().splitlines()
    assert lines[0].split("\t") == ["id", "psnr", "ssim", "noisy_psnr", "noisy_ssim"]
    assert lines[-1].startswith("mean\t")
    payload = json.loads(paths["json"].read_text())
    assert payload["mean"] == pytest.approx(summarize(reports))
    assert len(payload["sequences"][0]["frames"]) == 3


def test_evaluation_needs_matching_scenes(tmp_path, clean):
    lonely = SequenceManifest([SceneEntry("other", clean.scenes[0].frames)], clean.pixel_format, clean.root)
    with pytest.raises(ConfigError):
        evaluate_manifests(lonely, clean)


def test_temporal_statistics_of_a_rigid_kernel(tmp_path, clean):
    stats = temporal_statistics(clean, identity_checkpoint(), NOISE)
    assert stats["fraction_outside"] == pytest.approx(2 / 3)
    with pytest.raises(ConfigError):
        temporal_statistics(clean, identity_checkpoint())
