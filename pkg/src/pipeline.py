"""Batch orchestration behind the CLI: noise synthesis, denoising, evaluation.

Frames on disk are display-referred (sRGB); everything in between is linear.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import observability, settings
from .autograd.tensor import ParamStore
from .errors import ConfigError, ShapeError
from .imaging.gamma import gamma_forward, gamma_inverse
from .imaging.manifest import SceneEntry, SequenceManifest, write_manifest
from .imaging.metrics import QualityReport, evaluate
from .imaging.codecs import save_image
from .imaging.noise import NoiseParams, noise_channel, spawn_seeds, synthesize_noise
from .model.checkpoint import ModelCheckpoint
from .model.config import NetConfig
from .model.network import forward_denoise_full, infer, pad_to_multiple, temporal_coordinates, temporal_spread

logger = logging.getLogger(__name__)


def noise_from_header(header: Dict[str, str], blind: bool = False) -> Optional[NoiseParams]:
    if "sigma_s" not in header or "sigma_r" not in header:
        return None
    try:
        return NoiseParams(float(header["sigma_s"]), float(header["sigma_r"]), blind)
    except ValueError as e:
        raise ConfigError(f"bad noise parameters in manifest header: {e}") from e


def window_indices(k: int, count: int, tau: int) -> List[int]:
    """Frames k-tau .. k+tau, replicating the first/last frame past the ends."""
    return [min(max(i, 0), count - 1) for i in range(k - tau, k + tau + 1)]


def denoise_sequence(frames: np.ndarray, params: ParamStore, config: NetConfig,
                     noise: Optional[NoiseParams]) -> np.ndarray:
    """Denoise every frame of a linear grayscale sequence ``[H,W,T]``."""
    if frames.ndim != 3:
        raise ShapeError(f"expected [H,W,T] frames, got {frames.shape}")
    count = frames.shape[2]
    out = np.empty(frames.shape, dtype=frames.dtype)
    for k in range(count):
        window = frames[:, :, window_indices(k, count, config.tau)]
        out[:, :, k] = infer(params, config, window, noise)
    observability.DENOISED_FRAMES.labels(mode=config.mode).inc(count)
    return out


def denoise_color(frames: np.ndarray, params: ParamStore, config: NetConfig,
                  noise: Optional[NoiseParams]) -> np.ndarray:
    """Colour sequences ``[H,W,3,T]``: each channel goes through the grayscale model."""
    if frames.ndim != 4 or frames.shape[2] != 3:
        raise ShapeError(f"expected [H,W,3,T] colour frames, got {frames.shape}")
    channels = [denoise_sequence(frames[:, :, c, :], params, config, noise) for c in range(3)]
    return np.stack(channels, axis=2)


def _inference_params(ckpt: ModelCheckpoint) -> ParamStore:
    dtype = settings.inference_dtype()
    store = ckpt.param_store()
    return store if dtype == np.float64 else store.astype(dtype)


def denoise_manifest(manifest: SequenceManifest, ckpt: ModelCheckpoint, out_dir, noise: Optional[NoiseParams] = None,
                     color: bool = False, workers: int = 1) -> SequenceManifest:
    """Denoise every scene and write outputs plus ``manifest.tsv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    config = ckpt.config
    noise = noise or noise_from_header(manifest.header)
    if not config.blind and noise is None:
        raise ConfigError("non-blind model: pass --sigma-s/--sigma-r or use a manifest written by synth-noise")
    params = _inference_params(ckpt)
    dtype = settings.inference_dtype()
    fmt = "png8" if color else "png16"

    def run(scene: SceneEntry) -> SceneEntry:
        display = manifest.load_scene(scene)
        if color != (display.ndim == 4):
            raise ConfigError(f"scene {scene.scene_id}: --color must match the image channels")
        linear = gamma_inverse(display).astype(dtype)
        result = (denoise_color if color else denoise_sequence)(linear, params, config, noise)
        rel = []
        for k, src in enumerate(scene.frames):
            name = Path(scene.scene_id) / f"{Path(src).stem}.png"
            save_image(out_dir / name, gamma_forward(result[..., k]), fmt)
            rel.append(name)
        logger.info("denoised scene", extra={"scene": scene.scene_id, "frames": len(rel)})
        return SceneEntry(scene.scene_id, rel)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        scenes = list(pool.map(run, manifest.scenes))
    header = {k: v for k, v in manifest.header.items() if k != "format"}
    header["denoised_by"] = config.mode
    result = SequenceManifest(scenes, fmt, out_dir, header)
    write_manifest(out_dir / "manifest.tsv", result)
    return result


def synth_noise_manifest(manifest: SequenceManifest, out_dir, noise: NoiseParams, seed: int = 0) -> SequenceManifest:
    """Add signal-dependent noise in linear space and store the result as 16-bit sRGB."""
    out_dir = Path(out_dir)
    scenes = []
    for scene, scene_seed in zip(manifest.scenes, spawn_seeds(seed, len(manifest))):
        clean = gamma_inverse(manifest.load_scene(scene))
        noisy = gamma_forward(synthesize_noise(clean, noise, scene_seed))
        rel = []
        for k, src in enumerate(scene.frames):
            name = Path(scene.scene_id) / f"{Path(src).stem}.png"
            save_image(out_dir / name, noisy[..., k], "png8" if noisy.ndim == 4 else "png16")
            rel.append(name)
        scenes.append(SceneEntry(scene.scene_id, rel))
    header = {k: v for k, v in manifest.header.items() if k != "format"}
    header.update({"sigma_s": repr(noise.sigma_s), "sigma_r": repr(noise.sigma_r), "noise_seed": str(seed)})
    fmt = "png8" if scenes and manifest.load_scene(manifest.scenes[0]).ndim == 4 else "png16"
    result = SequenceManifest(scenes, fmt, out_dir, header)
    write_manifest(out_dir / "manifest.tsv", result)
    logger.info("noise synthesized", extra={"scenes": len(scenes), "sigma_s": noise.sigma_s, "sigma_r": noise.sigma_r})
    return result


def _frames(manifest: SequenceManifest, scene: SceneEntry) -> List[np.ndarray]:
    """Linear grayscale frames; colour inputs are scored on their channel mean."""
    data = gamma_inverse(manifest.load_scene(scene))
    if data.ndim == 4:
        data = data.mean(axis=2)
    return [data[..., k] for k in range(data.shape[-1])]


def evaluate_manifests(outputs: SequenceManifest, truth: SequenceManifest,
                       noisy: Optional[SequenceManifest] = None) -> List[QualityReport]:
    by_id = {s.scene_id: s for s in truth}
    noisy_by_id = {s.scene_id: s for s in noisy} if noisy is not None else {}
    reports = []
    for scene in outputs:
        if scene.scene_id not in by_id:
            raise ConfigError(f"no ground truth for scene {scene.scene_id!r}")
        out = _frames(outputs, scene)
        ref = _frames(truth, by_id[scene.scene_id])
        if len(out) != len(ref):
            raise ConfigError(f"scene {scene.scene_id}: {len(out)} outputs vs {len(ref)} ground-truth frames")
        nz = _frames(noisy, noisy_by_id[scene.scene_id]) if scene.scene_id in noisy_by_id else None
        reports.append(evaluate(scene.scene_id, out, ref, nz))
    return reports


def write_reports(reports: Sequence[QualityReport], out_dir) -> Dict[str, Path]:
    """``report.tsv`` (one line per sequence plus a mean row) and ``report.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["id\tpsnr\tssim\tnoisy_psnr\tnoisy_ssim"]
    for r in reports:
        lines.append(f"{r.sequence_id}\t{r.psnr_db:.4f}\t{r.ssim:.6f}\t{r.noisy_psnr_db:.4f}\t{r.noisy_ssim:.6f}")
    if reports:
        lines.append("mean\t{:.4f}\t{:.6f}\t{:.4f}\t{:.6f}".format(*summarize(reports).values()))
    tsv = out_dir / "report.tsv"
    tsv.write_text("\n".join(lines) + "\n")
    js = out_dir / "report.json"
    js.write_text(json.dumps({"sequences": [r.as_record() for r in reports], "mean": summarize(reports)},
                             indent=2, allow_nan=True))
    return {"tsv": tsv, "json": js}


def summarize(reports: Sequence[QualityReport]) -> Dict[str, float]:
    if not reports:
        return {"psnr": float("nan"), "ssim": float("nan"), "noisy_psnr": float("nan"), "noisy_ssim": float("nan")}
    return {
        "psnr": float(np.mean([r.psnr_db for r in reports])),
        "ssim": float(np.mean([r.ssim for r in reports])),
        "noisy_psnr": float(np.mean([r.noisy_psnr_db for r in reports])),
        "noisy_ssim": float(np.mean([r.noisy_ssim for r in reports])),
    }


def temporal_statistics(manifest: SequenceManifest, ckpt: ModelCheckpoint, noise: Optional[NoiseParams] = None,
                        threshold: float = 0.5) -> Dict[str, object]:
    """Distribution of learned temporal sampling positions over each scene's centre window."""
    config = ckpt.config
    params = ckpt.param_store()
    noise = NoiseParams(0.0, 0.0, blind=True) if config.blind else noise or noise_from_header(manifest.header)
    if noise is None:
        raise ConfigError("non-blind model: noise parameters are required")
    coords = []
    for scene in manifest:
        frames = gamma_inverse(manifest.load_scene(scene))
        if frames.ndim != 3:
            raise ShapeError("temporal statistics need grayscale sequences")
        centre = frames.shape[2] // 2
        window = frames[:, :, window_indices(centre, frames.shape[2], config.tau)]
        nmap = noise_channel(window[:, :, config.tau], noise)
        padded, _ = pad_to_multiple(np.concatenate([window, nmap[:, :, None]], axis=2), config.downsample_factor)
        out = forward_denoise_full(padded[:, :, :-1], params, config, padded[:, :, -1])
        coords.append(temporal_coordinates(out.offsets, config).reshape(-1))
    return temporal_spread(np.concatenate(coords) if coords else np.zeros(0), threshold)
