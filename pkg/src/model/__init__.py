"""Offset network, kernel-weight head and checkpoint container."""

from .config import MODES, NetConfig, default_config, default_groups, full_scale_config
from .network import (
    ForwardResult,
    build_network,
    forward_denoise,
    forward_denoise_full,
    halo_width,
    infer,
    layer_specs,
    network_input,
    pad_to_multiple,
    predict_offsets,
    predict_weights,
    temporal_coordinates,
    temporal_spread,
)
from .checkpoint import ModelCheckpoint, check_compatible, from_bytes, load_checkpoint, save_checkpoint, to_bytes

__all__ = [
    'MODES', 'NetConfig', 'default_config', 'default_groups', 'full_scale_config',
    'ForwardResult', 'build_network', 'forward_denoise', 'forward_denoise_full', 'halo_width',
    'infer', 'layer_specs', 'network_input', 'pad_to_multiple', 'predict_offsets',
    'predict_weights', 'temporal_coordinates', 'temporal_spread',
    'ModelCheckpoint', 'check_compatible', 'from_bytes', 'load_checkpoint', 'save_checkpoint', 'to_bytes',
]
