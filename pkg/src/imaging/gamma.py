"""sRGB transfer function and its exact inverse (numpy arrays)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GammaParams:
    alpha: float = 0.055
    threshold: float = 0.0031308
    linear_slope: float = 12.92
    exponent: float = 1.0 / 2.4

    @property
    def encoded_threshold(self) -> float:
        return self.linear_slope * self.threshold


SRGB = GammaParams()


def gamma_forward(y_linear, params: GammaParams = SRGB) -> np.ndarray:
    """Linear -> display-referred. Input is clamped to [0, 1] first."""
    y = np.clip(np.asarray(y_linear, dtype=np.float64), 0.0, 1.0)
    curved = (1.0 + params.alpha) * np.power(np.maximum(y, params.threshold), params.exponent) - params.alpha
    return np.where(y <= params.threshold, params.linear_slope * y, curved)


def gamma_inverse(i_srgb, params: GammaParams = SRGB) -> np.ndarray:
    i = np.asarray(i_srgb, dtype=np.float64)
    lo = i / params.linear_slope
    base = np.maximum((i + params.alpha) / (1.0 + params.alpha), 0.0)
    hi = np.power(base, 1.0 / params.exponent)
    return np.where(i <= params.encoded_threshold, lo, hi)
