"""Synthetic textured scenes under rigid integer translation.

Each scene is a crop window sliding across a larger pattern canvas with a
constant per-frame velocity, so frame ``k`` is frame 0 shifted by ``k * v``.
Frames are produced in display (sRGB) space, which is how they are stored.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image, ImageDraw

from .codecs import save_image
from .manifest import SceneEntry, SequenceManifest, write_manifest
from .noise import spawn_seeds

logger = logging.getLogger(__name__)

PATTERNS = ("gradients", "checkers", "blobs", "strokes")


@dataclass(frozen=True)
class ToyDatasetConfig:
    num_scenes: int = 8
    size: int = 32
    frames: int = 5
    motion: int = 2
    pattern: str = "mixed"
    seed: int = 0
    pixel_format: str = "png16"

    def __post_init__(self):
        if self.pattern != "mixed" and self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be 'mixed' or one of {PATTERNS}, got {self.pattern!r}")
        if self.frames < 1 or self.frames % 2 == 0:
            raise ValueError(f"frames must be odd (2*tau+1), got {self.frames}")
        if self.size < 1 or self.num_scenes < 0 or self.motion < 0:
            raise ValueError("size must be positive; num_scenes and motion non-negative")


def _gradients(rng, n: int) -> np.ndarray:
    yy, xx = np.mgrid[0:n, 0:n] / max(n - 1, 1)
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * xx + np.sin(angle) * yy
    freq = rng.uniform(2.0, 6.0)
    wave = 0.5 + 0.5 * np.sin(2 * np.pi * freq * (np.sin(angle) * xx - np.cos(angle) * yy))
    out = 0.6 * (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12) + 0.4 * wave
    return out


def _checkers(rng, n: int) -> np.ndarray:
    cell = int(rng.integers(3, 9))
    lo, hi = np.sort(rng.uniform(0.05, 0.95, size=2))
    yy, xx = np.mgrid[0:n, 0:n]
    return np.where(((yy // cell) + (xx // cell)) % 2 == 0, lo, hi)


def _blobs(rng, n: int) -> np.ndarray:
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    out = np.full((n, n), rng.uniform(0.05, 0.3))
    for _ in range(int(rng.integers(6, 16))):
        cy, cx = rng.uniform(0, n, size=2)
        r = rng.uniform(n / 20, n / 6)
        out += rng.uniform(0.2, 0.7) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    return np.clip(out, 0.0, 1.0)


def _strokes(rng, n: int) -> np.ndarray:
    bg = int(rng.integers(20, 90))
    img = Image.new("L", (n, n), color=bg)
    draw = ImageDraw.Draw(img)
    for _ in range(int(rng.integers(n // 4, n // 2) + 1)):
        x0, y0 = rng.integers(0, n, size=2)
        pts = [(int(x0), int(y0))]
        for _ in range(int(rng.integers(1, 4))):
            x0 = int(np.clip(x0 + rng.integers(-n // 6, n // 6 + 1), 0, n - 1))
            y0 = int(np.clip(y0 + rng.integers(-n // 6, n // 6 + 1), 0, n - 1))
            pts.append((x0, y0))
        draw.line(pts, fill=int(rng.integers(150, 256)), width=int(rng.integers(1, 4)))
    return np.asarray(img, dtype=np.float64) / 255.0


_GENERATORS = {"gradients": _gradients, "checkers": _checkers, "blobs": _blobs, "strokes": _strokes}


def _velocity(rng, motion: int) -> Tuple[int, int]:
    if motion == 0:
        return 0, 0
    return int(rng.integers(-motion, motion + 1)), int(rng.integers(-motion, motion + 1))


def make_scene(config: ToyDatasetConfig, scene_seed: int) -> Tuple[np.ndarray, Tuple[int, int], str]:
    """One scene: ([size,size,frames] display-space frames, (vy, vx), pattern name)."""
    rng = np.random.default_rng(scene_seed)
    pattern = config.pattern if config.pattern != "mixed" else PATTERNS[int(rng.integers(len(PATTERNS)))]
    span = config.motion * (config.frames - 1)
    canvas = _GENERATORS[pattern](rng, config.size + 2 * span)
    vy, vx = _velocity(rng, config.motion)
    frames = []
    for k in range(config.frames):
        oy, ox = span + k * vy, span + k * vx
        frames.append(canvas[oy:oy + config.size, ox:ox + config.size])
    return np.stack(frames, axis=-1), (vy, vx), pattern


def make_toy_scenes(config: ToyDatasetConfig) -> List[Tuple[str, np.ndarray]]:
    seeds = spawn_seeds(config.seed, config.num_scenes)
    return [(f"scene_{i:04d}", make_scene(config, s)[0]) for i, s in enumerate(seeds)]


def make_toy_dataset(config: ToyDatasetConfig, out_dir) -> SequenceManifest:
    """Write every scene's frames under ``out_dir`` and return (and write) the manifest."""
    out_dir = Path(out_dir)
    suffix = ".pgm" if config.pixel_format == "pgm8" else ".png"
    scenes = []
    for scene_id, frames in make_toy_scenes(config):
        rel = []
        for k in range(frames.shape[-1]):
            name = Path(scene_id) / f"frame_{k:04d}{suffix}"
            save_image(out_dir / name, frames[..., k], config.pixel_format)
            rel.append(name)
        scenes.append(SceneEntry(scene_id, rel))
    header = {
        "generator": "toy",
        "size": str(config.size),
        "frames": str(config.frames),
        "motion": str(config.motion),
        "pattern": config.pattern,
        "seed": str(config.seed),
    }
    manifest = SequenceManifest(scenes, config.pixel_format, out_dir, header)
    write_manifest(out_dir / "manifest.tsv", manifest)
    logger.info("toy dataset written", extra={"scenes": len(scenes), "out_dir": str(out_dir)})
    return manifest


def subsample_frames(frames: np.ndarray, step: int) -> np.ndarray:
    """Keep every ``step``-th frame (last axis), anchored on the centre frame."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    c = frames.shape[-1] // 2
    half = c // step
    keep = np.arange(c - half * step, c + half * step + 1, step)
    return frames[..., keep]
