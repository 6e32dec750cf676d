"""Signal-dependent Gaussian noise and the noise-level input channel.

Noise is drawn per pixel from N(0, sigma_s * q + sigma_r**2) where ``q`` is
the clean linear intensity. Every function that draws random numbers takes an
explicit seed; ``spawn_seeds`` splits one seed into independent streams.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

SIGMA_S_RANGE = (1e-4, 1e-2)
SIGMA_R_RANGE = (1e-3, 10 ** -1.5)


@dataclass(frozen=True)
class NoiseParams:
    sigma_s: float
    sigma_r: float
    blind: bool = False

    def __post_init__(self):
        if self.sigma_s < 0 or self.sigma_r < 0:
            raise ValueError(f"noise parameters must be non-negative, got {self}")

    def variance(self, q) -> np.ndarray:
        return self.sigma_s * np.asarray(q, dtype=np.float64) + self.sigma_r ** 2


PRESETS = {
    "low": NoiseParams(sigma_s=2.5e-3, sigma_r=1e-2),
    "high": NoiseParams(sigma_s=6.4e-3, sigma_r=2e-2),
}


def preset(name: str, blind: bool = False) -> NoiseParams:
    try:
        p = PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None
    return NoiseParams(p.sigma_s, p.sigma_r, blind)


def spawn_seeds(seed: int, n: int) -> List[int]:
    """Derive ``n`` independent child seeds (one per worker or per scene)."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def synthesize_noise(clean_linear, params: NoiseParams, seed: int) -> np.ndarray:
    clean = np.asarray(clean_linear, dtype=np.float64)
    if params.sigma_s == 0 and params.sigma_r == 0:
        return clean.copy()
    # clean in [0, 1] keeps the variance non-negative; clip guards rounding below 0
    std = np.sqrt(np.maximum(params.variance(clean), 0.0))
    rng = np.random.default_rng(seed)
    return clean + rng.standard_normal(clean.shape) * std


def noise_level_map(q_ref, params: NoiseParams) -> np.ndarray:
    """Per-pixel sqrt(sigma_r**2 + sigma_s * q_ref); negative noisy values count as 0."""
    if params.blind:
        raise ValueError("noise_level_map is undefined in blind mode")
    q = np.maximum(np.asarray(q_ref, dtype=np.float64), 0.0)
    return np.sqrt(params.sigma_r ** 2 + params.sigma_s * q)


def noise_channel(q_ref, params: NoiseParams) -> np.ndarray:
    """Extra network input: the level map, or zeros when blind."""
    if params.blind:
        return np.zeros(np.shape(q_ref), dtype=np.float64)
    return noise_level_map(q_ref, params)


def sample_noise_params(seed, blind: bool = False) -> NoiseParams:
    """Log-uniform draw of (sigma_s, sigma_r) from the training ranges.

    ``seed`` may be an int or an already-built ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ls = rng.uniform(np.log10(SIGMA_S_RANGE[0]), np.log10(SIGMA_S_RANGE[1]))
    lr = rng.uniform(np.log10(SIGMA_R_RANGE[0]), np.log10(SIGMA_R_RANGE[1]))
    sigma_s = float(np.clip(10.0 ** ls, *SIGMA_S_RANGE))
    sigma_r = float(np.clip(10.0 ** lr, *SIGMA_R_RANGE))
    return NoiseParams(sigma_s, sigma_r, blind)
