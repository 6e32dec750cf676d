"""PSNR / SSIM scoring in display-referred (gamma) space."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ShapeError
from .gamma import gamma_forward

PSNR_CAP_DB = 100.0
SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # 11-tap window at sigma 1.5
SSIM_WINDOW = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, peak: float = 1.0) -> float:
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / mse))


def ssim(a, b, dynamic_range: float = 1.0) -> float:
    """Mean SSIM over positions where the Gaussian window fits inside the image."""
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ShapeError(f"ssim expects a grayscale [H,W] image, got {a.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2

    def blur(x):
        return gaussian_filter(x, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a ** 2
    var_b = blur(b * b) - mu_b ** 2
    cov = blur(a * b) - mu_a * mu_b
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    pad = SSIM_WINDOW // 2
    return float(np.clip(smap[pad:-pad, pad:-pad].mean(), -1.0, 1.0))


@dataclass
class QualityReport:
    sequence_id: str
    psnr_db: float
    ssim: float
    per_frame: List[Dict[str, float]] = field(default_factory=list)
    noisy_psnr_db: float = float("nan")
    noisy_ssim: float = float("nan")

    def as_record(self) -> Dict[str, object]:
        return {
            "id": self.sequence_id,
            "psnr": self.psnr_db,
            "ssim": self.ssim,
            "noisy_psnr": self.noisy_psnr_db,
            "noisy_ssim": self.noisy_ssim,
            "frames": self.per_frame,
        }


def evaluate(sequence_id: str, outputs, references, noisy=None) -> QualityReport:
    """Score linear-space output frames against ground truth after gamma correction."""
    if len(outputs) != len(references):
        raise ShapeError(f"{len(outputs)} output frames for {len(references)} references")
    if not outputs:
        raise ShapeError("nothing to evaluate")
    frames = []
    for k, (out, ref) in enumerate(zip(outputs, references)):
        o, r = gamma_forward(out), gamma_forward(ref)
        frames.append({"frame": k, "psnr": psnr(o, r), "ssim": ssim(o, r)})
    report = QualityReport(
        sequence_id,
        float(np.mean([f["psnr"] for f in frames])),
        float(np.mean([f["ssim"] for f in frames])),
        frames,
    )
    if noisy is not None:
        pairs = [(gamma_forward(n), gamma_forward(r)) for n, r in zip(noisy, references)]
        report.noisy_psnr_db = float(np.mean([psnr(n, r) for n, r in pairs]))
        report.noisy_ssim = float(np.mean([ssim(n, r) for n, r in pairs]))
    return report
