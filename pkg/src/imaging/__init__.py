"""Gamma, noise synthesis, quality metrics and image/sequence I/O."""

from .gamma import SRGB, GammaParams, gamma_forward, gamma_inverse
from .noise import (
    PRESETS,
    NoiseParams,
    noise_channel,
    noise_level_map,
    preset,
    sample_noise_params,
    spawn_seeds,
    synthesize_noise,
)
from .metrics import QualityReport, evaluate, psnr, ssim
from .codecs import load_image, load_save_image, save_image
from .manifest import SceneEntry, SequenceManifest, read_manifest, write_manifest
from .toydata import ToyDatasetConfig, make_toy_dataset, make_toy_scenes, subsample_frames

__all__ = [
    'SRGB', 'GammaParams', 'gamma_forward', 'gamma_inverse',
    'PRESETS', 'NoiseParams', 'noise_channel', 'noise_level_map', 'preset',
    'sample_noise_params', 'spawn_seeds', 'synthesize_noise',
    'QualityReport', 'evaluate', 'psnr', 'ssim',
    'load_image', 'load_save_image', 'save_image',
    'SceneEntry', 'SequenceManifest', 'read_manifest', 'write_manifest',
    'ToyDatasetConfig', 'make_toy_dataset', 'make_toy_scenes', 'subsample_frames',
]
