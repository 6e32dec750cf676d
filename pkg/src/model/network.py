"""U-Net offset predictor and per-pixel kernel-weight head.

Layout (``L = config.levels``; widths are the full-scale values times
``width_scale``)::

    encoder level i:   [avgpool 2x if i > 0] -> convs_per_block x (conv3x3 + ReLU)
    decoder level i:   upsample 2x -> conv3x3 + ReLU to the skip width -> + skip_i
                       -> (convs_per_block - 1) x conv  (levels i >= 1 only)
    refine:            conv3x3 + ReLU (full-resolution features)
    offset head:       conv3x3 -> tanh -> per-axis scale (max_disp, max_disp[, tau])
    weight head:       [samples, input, features] -> conv+ReLU -> conv+ReLU -> conv (linear)

Inputs are ``[H, W, C]`` arrays; the convolutions run on ``[C, H, W]``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..autograd import ops
from ..autograd.tensor import ParamStore, Tensor, as_tensor
from ..errors import ConfigError, ShapeError
from ..imaging.noise import NoiseParams, noise_channel
from ..sampling import deform_sample, group_outputs, tap_sum
from .config import ENCODER_WIDTHS, REFINE_WIDTH, WEIGHT_HEAD_WIDTH, NetConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    cin: int
    cout: int
    kind: str  # "relu" hidden layer, "offset" or "weight" output layer


def _trunk_specs(config: NetConfig) -> List[LayerSpec]:
    specs: List[LayerSpec] = []
    enc = [config.width(w) for w in ENCODER_WIDTHS[:config.levels]]
    cin = config.input_channels
    for i, w in enumerate(enc):
        for j in range(config.convs_per_block):
            specs.append(LayerSpec(f"enc{i}.conv{j}", cin, w, "relu"))
            cin = w
    for i in range(config.levels - 2, -1, -1):
        specs.append(LayerSpec(f"dec{i}.up", cin, enc[i], "relu"))
        cin = enc[i]
        if i > 0:
            for j in range(1, config.convs_per_block):
                specs.append(LayerSpec(f"dec{i}.conv{j}", cin, enc[i], "relu"))
    specs.append(LayerSpec("refine", cin, config.width(REFINE_WIDTH), "relu"))
    return specs


def feature_channels(config: NetConfig) -> int:
    return config.width(REFINE_WIDTH)


def layer_specs(config: NetConfig) -> List[LayerSpec]:
    specs = _trunk_specs(config)
    n = config.taps
    if not config.fixed_grid:
        specs.append(LayerSpec("offset_out", feature_channels(config), n * config.components, "offset"))
    if config.dynamic_weights:
        hidden = config.width(WEIGHT_HEAD_WIDTH)
        cin = n + config.input_channels + feature_channels(config)
        specs.append(LayerSpec("weight0", cin, hidden, "relu"))
        specs.append(LayerSpec("weight1", hidden, hidden, "relu"))
        specs.append(LayerSpec("weight_out", hidden, n, "weight"))
    return specs


def build_network(config: NetConfig, seed: int = 0) -> ParamStore:
    """Fan-in scaled uniform initialisation, deterministic in ``seed``.

    Output layers start small so initial offsets are near zero and the initial
    kernel is close to a box filter (weight bias = 1/N).
    """
    rng = np.random.default_rng(seed)
    params = ParamStore()
    for spec in layer_specs(config):
        fan_in = spec.cin * 9
        bound = np.sqrt(6.0 / fan_in) if spec.kind == "relu" else 0.1 * np.sqrt(1.0 / fan_in)
        params.add(f"{spec.name}.w", rng.uniform(-bound, bound, size=(spec.cout, spec.cin, 3, 3)))
        bias = np.full(spec.cout, 1.0 / spec.cout) if spec.kind == "weight" else np.zeros(spec.cout)
        params.add(f"{spec.name}.b", bias)
    logger.info("network built", extra={"mode": config.mode, "parameters": params.num_values(), "seed": seed})
    return params


def _conv(params: ParamStore, name: str, x: Tensor, relu: bool = True) -> Tensor:
    y = ops.conv2d(x, params[f"{name}.w"], params[f"{name}.b"])
    return ops.relu(y) if relu else y


def _check_input(x_in: Tensor, config: NetConfig) -> None:
    if x_in.data.ndim != 3 or x_in.shape[2] != config.input_channels:
        raise ShapeError(f"network input must be [H,W,{config.input_channels}], got {x_in.shape}")
    h, w = x_in.shape[:2]
    f = config.downsample_factor
    if h % f or w % f:
        raise ShapeError(f"spatial extents {h}x{w} must be divisible by {f}; pad the input first")


def _trunk(x_chw: Tensor, params: ParamStore, config: NetConfig) -> Tensor:
    skips = []
    h = x_chw
    for i in range(config.levels):
        if i > 0:
            h = ops.resample2x(h, "down")
        for j in range(config.convs_per_block):
            h = _conv(params, f"enc{i}.conv{j}", h)
        skips.append(h)
    for i in range(config.levels - 2, -1, -1):
        h = ops.resample2x(h, "up")
        h = ops.add(_conv(params, f"dec{i}.up", h), skips[i])
        if i > 0:
            for j in range(1, config.convs_per_block):
                h = _conv(params, f"dec{i}.conv{j}", h)
    return _conv(params, "refine", h)


def _offset_scale(config: NetConfig) -> np.ndarray:
    scale = [config.max_disp, config.max_disp]
    if config.components == 3:
        scale.append(float(config.tau))
    return np.asarray(scale)


def _offsets_from_features(features_chw: Tensor, params: ParamStore, config: NetConfig) -> Tensor:
    _, h, w = features_chw.shape
    if config.fixed_grid:
        return Tensor(np.zeros((h, w, config.taps, config.components)))
    raw = ops.tanh(_conv(params, "offset_out", features_chw, relu=False))
    hwc = ops.transpose(raw, (1, 2, 0))
    v = ops.reshape(hwc, (h, w, config.taps, config.components))
    return ops.mul_const(v, _offset_scale(config))


def predict_offsets(x_in, params: ParamStore, config: NetConfig) -> Tuple[Tensor, Tensor]:
    """Return ``(V [H,W,N,c], features [H,W,C_feat])`` for an ``[H,W,2tau+2]`` input."""
    x_in = as_tensor(x_in)
    _check_input(x_in, config)
    feats = _trunk(ops.transpose(x_in, (2, 0, 1)), params, config)
    return _offsets_from_features(feats, params, config), ops.transpose(feats, (1, 2, 0))


def _weights_chw(samples: Tensor, x_chw: Tensor, feats_chw: Tensor, params: ParamStore, config: NetConfig) -> Tensor:
    h, w, n = samples.shape
    if not config.dynamic_weights:
        return Tensor(np.full((h, w, n), 1.0 / n))
    stacked = ops.concat([ops.transpose(samples, (2, 0, 1)), x_chw, feats_chw], axis=0)
    hidden = _conv(params, "weight1", _conv(params, "weight0", stacked))
    return ops.transpose(_conv(params, "weight_out", hidden, relu=False), (1, 2, 0))


def predict_weights(sampled_pixels, x_in, features, params: ParamStore, config: NetConfig) -> Tensor:
    """Per-pixel kernel weights ``F [H,W,N]``; the last layer is linear."""
    s, x_in, f = as_tensor(sampled_pixels), as_tensor(x_in), as_tensor(features)
    if s.data.ndim != 3 or s.shape[2] != config.taps:
        raise ShapeError(f"sampled pixels must be [H,W,{config.taps}], got {s.shape}")
    if x_in.shape[:2] != s.shape[:2] or f.shape[:2] != s.shape[:2]:
        raise ShapeError(f"spatial extents differ: samples {s.shape}, input {x_in.shape}, features {f.shape}")
    if f.shape[2] != feature_channels(config):
        raise ShapeError(f"features must have {feature_channels(config)} channels, got {f.shape[2]}")
    return _weights_chw(s, ops.transpose(x_in, (2, 0, 1)), ops.transpose(f, (2, 0, 1)), params, config)


@dataclass
class ForwardResult:
    y: Tensor
    groups: List[Tensor]
    offsets: Tensor
    weights: Tensor
    samples: Tensor
    features: Tensor


def network_input(x_seq, noise) -> Tensor:
    """Stack the frames ``[H,W,T]`` with the noise channel ``[H,W]`` into ``[H,W,T+1]``."""
    x = np.asarray(getattr(x_seq, "data", x_seq))
    if x.ndim == 2:
        x = x[:, :, None]
    nmap = np.asarray(noise, dtype=x.dtype)
    if nmap.shape != x.shape[:2]:
        raise ShapeError(f"noise channel {nmap.shape} does not match frames {x.shape[:2]}")
    return Tensor(np.concatenate([x, nmap[:, :, None]], axis=2))


def forward_denoise_full(x_seq, params: ParamStore, config: NetConfig, noise=None) -> ForwardResult:
    """Offsets -> deformed sampling -> weights -> filtered reference frame and group outputs.

    ``noise`` is the ``[H,W]`` noise-level channel; required unless ``config.blind``.
    """
    x = as_tensor(x_seq)
    if x.data.ndim == 2:
        x = ops.reshape(x, x.shape + (1,))
    if x.data.ndim != 3 or x.shape[2] != config.frames:
        raise ShapeError(f"{config.mode} expects [H,W,{config.frames}] frames, got {x.shape}")
    if noise is None:
        if not config.blind:
            raise ShapeError("non-blind denoising needs the noise-level channel")
        noise = np.zeros(x.shape[:2])
    x_in = network_input(x, noise)
    _check_input(x_in, config)
    x_chw = ops.transpose(x_in, (2, 0, 1))
    feats = _trunk(x_chw, params, config)
    offsets = _offsets_from_features(feats, params, config)
    grid = config.grid()
    volume = ops.reshape(x, x.shape[:2]) if config.mode == "image2d" else x
    samples = deform_sample(volume, offsets, grid)
    weights = _weights_chw(samples, x_chw, feats, params, config)
    y = tap_sum(samples, weights)
    groups = group_outputs(samples, weights, config.groups)
    return ForwardResult(y, groups, offsets, weights, samples, ops.transpose(feats, (1, 2, 0)))


def forward_denoise(x_seq, params: ParamStore, config: NetConfig, noise=None) -> Tuple[Tensor, List[Tensor]]:
    out = forward_denoise_full(x_seq, params, config, noise)
    return out.y, out.groups


def pad_to_multiple(x: np.ndarray, factor: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Reflect-pad the two leading axes up to a multiple of ``factor``."""
    h, w = x.shape[:2]
    ph, pw = (-h) % factor, (-w) % factor
    if not ph and not pw:
        return x, (h, w)
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (x.ndim - 2)
    mode = "reflect" if min(h, w) > 1 else "edge"
    return np.pad(x, pad, mode=mode), (h, w)


def infer(params: ParamStore, config: NetConfig, x_seq: np.ndarray, noise: Optional[NoiseParams]) -> np.ndarray:
    """Denoise the reference frame of ``x_seq`` (any spatial size); returns ``[H,W]``."""
    x = np.asarray(x_seq)
    if x.ndim == 2:
        x = x[:, :, None]
    if config.blind:
        noise = NoiseParams(0.0, 0.0, blind=True)
    elif noise is None or noise.blind:
        raise ConfigError("this model is non-blind; noise parameters are required")
    nmap = noise_channel(x[:, :, config.tau], noise)
    stacked = np.concatenate([x, nmap[:, :, None]], axis=2).astype(x.dtype, copy=False)
    padded, (h, w) = pad_to_multiple(stacked, config.downsample_factor)
    y, _ = forward_denoise(padded[:, :, :-1], params, config, padded[:, :, -1])
    return y.data[:h, :w]


def halo_width(config: NetConfig) -> int:
    """Pixels of border context an output pixel depends on (used to crop comparisons)."""
    reach = 0
    for i in range(config.levels):
        reach += config.convs_per_block * 2 ** i
        if i:
            reach += 2 * 2 ** i  # pooling on the way down, upsampling on the way up
    for i in range(config.levels - 1):
        reach += 2 ** i * (config.convs_per_block if i else 1)
    reach += 1 + 3  # refine, weight head
    if not config.fixed_grid:
        reach += 1
    kernel = max(config.kernel_shape[:2]) // 2
    disp = 0 if config.fixed_grid else int(np.ceil(config.max_disp)) + 1
    return reach + kernel + disp


def temporal_coordinates(offsets, config: NetConfig) -> np.ndarray:
    """Absolute temporal sampling positions ``t_hat + V_t`` (video3d only)."""
    if config.mode != "video3d":
        raise ValueError("temporal sampling coordinates exist only for video3d")
    v = np.asarray(getattr(offsets, "data", offsets))
    return config.grid().taps[:, 2] + v[..., 2]


def temporal_spread(coords, threshold: float = 0.5, bins: int = 21) -> Dict[str, object]:
    """Histogram of temporal coordinates and the fraction with ``|t| > threshold``."""
    c = np.asarray(coords, dtype=np.float64).reshape(-1)
    lim = max(1.0, float(np.ceil(np.abs(c).max()))) if c.size else 1.0
    counts, edges = np.histogram(c, bins=bins, range=(-lim, lim))
    return {
        "fraction_outside": float(np.mean(np.abs(c) > threshold)) if c.size else 0.0,
        "counts": counts.tolist(),
        "edges": edges.tolist(),
    }
