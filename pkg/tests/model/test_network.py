import numpy as np
import pytest

from src.errors import ConfigError, ShapeError
from src.gradcheck import check_network
from src.imaging import NoiseParams, noise_channel
from src.model import (
    NetConfig,
    build_network,
    default_config,
    forward_denoise,
    forward_denoise_full,
    full_scale_config,
    halo_width,
    infer,
    layer_specs,
    pad_to_multiple,
    predict_offsets,
    predict_weights,
    temporal_coordinates,
    temporal_spread,
)

NOISE = NoiseParams(2.5e-3, 1e-2)


def small_config(mode="video3d", **overrides):
    params = dict(width_scale=0.1, levels=2, convs_per_block=1, max_disp=2.0)
    if mode != "image2d":
        params["tau"] = 1
    params.update(overrides)
    return default_config(mode, **params)


def _inputs(config, size=8, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 0.95, (size, size, config.frames))
    return x, noise_channel(x[:, :, config.tau], NOISE)


def _make_identity(params, config):
    if "offset_out.w" in params:
        params["offset_out.w"].data[:] = 0.0
        params["offset_out.b"].data[:] = 0.0
    params["weight_out.w"].data[:] = 0.0
    params["weight_out.b"].data[:] = 0.0
    params["weight_out.b"].data[config.taps // 2] = 1.0


def test_full_scale_layer_widths():
    specs = {s.name: s for s in layer_specs(full_scale_config("video3d"))}
    assert specs["enc0.conv0"].cin == 6 and specs["enc0.conv0"].cout == 64
    assert specs["enc4.conv2"].cout == 512
    assert specs["refine"].cout == 128
    assert specs["offset_out"].cout == 81
    assert specs["weight0"].cin == 27 + 6 + 128 and specs["weight0"].cout == 64
    assert specs["weight_out"].cout == 27
    image = {s.name: s for s in layer_specs(full_scale_config("image2d"))}
    assert image["offset_out"].cout == 50
    assert image["enc0.conv0"].cin == 2


def test_ablation_variants_drop_their_heads():
    names = [s.name for s in layer_specs(small_config(fixed_grid=True))]
    assert "offset_out" not in names and "weight_out" in names
    names = [s.name for s in layer_specs(small_config(dynamic_weights=False))]
    assert "offset_out" in names and not any(n.startswith("weight") for n in names)


def test_build_is_deterministic():
    config = small_config()
    a, b, c = build_network(config, 3), build_network(config, 3), build_network(config, 4)
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    assert not np.array_equal(a["enc0.conv0.w"].data, c["enc0.conv0.w"].data)
    assert np.allclose(a["weight_out.b"].data, 1.0 / config.taps)


@pytest.mark.parametrize("mode", ["image2d", "video2d", "video3d"])
def test_forward_shapes(mode):
    config = small_config(mode)
    params = build_network(config, 0)
    x, nmap = _inputs(config)
    out = forward_denoise_full(x, params, config, nmap)
    assert out.y.shape == (8, 8)
    assert len(out.groups) == config.groups
    assert out.offsets.shape == (8, 8, config.taps, config.components)
    assert out.weights.shape == (8, 8, config.taps)
    assert out.samples.shape == (8, 8, config.taps)


def test_offsets_stay_within_bounds():
    config = small_config(max_disp=1.5)
    params = build_network(config, 1)
    params["offset_out.w"].data *= 1000.0
    x, nmap = _inputs(config)
    x_in = np.concatenate([x, nmap[:, :, None]], axis=2)
    v, feats = predict_offsets(x_in, params, config)
    assert np.max(np.abs(v.data[..., :2])) <= 1.5
    assert np.max(np.abs(v.data[..., 2])) <= config.tau
    assert np.max(np.abs(v.data[..., :2])) > 1.0
    assert feats.shape == (8, 8, config.width(128))


def test_weights_are_unconstrained_in_sign():
    config = small_config()
    params = build_network(config, 2)
    params["weight_out.b"].data[:] = 0.0
    x, nmap = _inputs(config)
    f = forward_denoise_full(x, params, config, nmap).weights.data
    assert f.min() < 0.0 < f.max()


def test_predict_weights_checks_shapes():
    config = small_config()
    params = build_network(config, 0)
    x, nmap = _inputs(config)
    x_in = np.concatenate([x, nmap[:, :, None]], axis=2)
    out = forward_denoise_full(x, params, config, nmap)
    weights = predict_weights(out.samples, x_in, out.features, params, config)
    assert np.allclose(weights.data, out.weights.data)
    with pytest.raises(ShapeError):
        predict_weights(out.samples.data[..., :5], x_in, out.features, params, config)
    with pytest.raises(ShapeError):
        predict_weights(out.samples, x_in, out.features.data[..., :1], params, config)


@pytest.mark.parametrize("mode", ["image2d", "video2d", "video3d"])
def test_identity_parameters_return_the_reference_frame(mode):
    config = small_config(mode)
    params = build_network(config, 5)
    _make_identity(params, config)
    x, nmap = _inputs(config, size=12)
    y, groups = forward_denoise(x, params, config, nmap)
    assert np.array_equal(y.data, x[:, :, config.tau])


def test_identity_with_a_fixed_grid():
    config = small_config(fixed_grid=True)
    params = build_network(config, 5)
    _make_identity(params, config)
    x, nmap = _inputs(config)
    out = forward_denoise_full(x, params, config, nmap)
    assert not np.any(out.offsets.data)
    assert np.array_equal(out.y.data, x[:, :, config.tau])


def test_uniform_weights_average_the_samples():
    config = small_config(dynamic_weights=False)
    params = build_network(config, 0)
    x, nmap = _inputs(config)
    out = forward_denoise_full(x, params, config, nmap)
    assert np.allclose(out.weights.data, 1.0 / config.taps)
    assert np.allclose(out.y.data, out.samples.data.mean(axis=-1))


def test_input_validation():
    config = small_config()
    params = build_network(config, 0)
    x, nmap = _inputs(config, size=9)
    with pytest.raises(ShapeError):
        forward_denoise(x, params, config, nmap)
    x, nmap = _inputs(config)
    with pytest.raises(ShapeError):
        forward_denoise(x, params, config)
    with pytest.raises(ShapeError):
        forward_denoise(x[:, :, :2], params, config, nmap)


def test_infer_pads_and_crops():
    config = small_config()
    params = build_network(config, 0)
    x, _ = _inputs(config, size=12)
    out = infer(params, config, x[:11, :9], NOISE)
    assert out.shape == (11, 9)
    with pytest.raises(ConfigError):
        infer(params, config, x, None)
    blind = small_config(blind=True)
    assert infer(build_network(blind, 0), blind, x, None).shape == (12, 12)


def test_pad_to_multiple():
    x = np.arange(30.0).reshape(5, 6)
    padded, size = pad_to_multiple(x, 4)
    assert padded.shape == (8, 8) and size == (5, 6)
    assert padded[5, 0] == x[3, 0]
    same, _ = pad_to_multiple(np.zeros((8, 4)), 4)
    assert same.shape == (8, 4)


def test_translation_consistency_in_the_interior():
    config = small_config()
    params = build_network(config, 7)
    rng = np.random.default_rng(8)
    big = rng.uniform(0.05, 0.95, (68, 68, config.frames))
    nmap = noise_channel(big[:, :, config.tau], NOISE)
    shift = 2 * config.downsample_factor
    a, _ = forward_denoise(big[:64, :64], params, config, nmap[:64, :64])
    b, _ = forward_denoise(big[shift:shift + 64, shift:shift + 64], params, config, nmap[shift:shift + 64, shift:shift + 64])
    halo = halo_width(config)
    lo, hi = halo + shift, 64 - halo
    assert hi > lo
    assert np.allclose(a.data[lo:hi, lo:hi], b.data[lo - shift:hi - shift, lo - shift:hi - shift], atol=1e-10)


def test_temporal_statistics():
    config = small_config()
    zeros = np.zeros((4, 4, config.taps, 3))
    coords = temporal_coordinates(zeros, config)
    assert coords.shape == (4, 4, config.taps)
    assert set(np.unique(coords)) == {-1.0, 0.0, 1.0}
    stats = temporal_spread(coords)
    assert stats["fraction_outside"] == pytest.approx(2 / 3)
    assert sum(stats["counts"]) == coords.size
    with pytest.raises(ValueError):
        temporal_coordinates(np.zeros((4, 4, 9, 2)), small_config("video2d"))


@pytest.mark.parametrize("mode", ["image2d", "video2d", "video3d"])
def test_network_gradients_match_finite_differences(mode):
    rng = np.random.default_rng(9)
    assert check_network(rng, mode) < 1e-3
