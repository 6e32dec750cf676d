from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Tuple

from ..errors import ConfigError
from ..sampling import RigidGrid, per_frame_grid, rigid_grid

MODES = ("image2d", "video2d", "video3d")

# Feature widths at full scale: encoder levels, then the full-resolution refinement.
ENCODER_WIDTHS = (64, 128, 256, 512, 512)
REFINE_WIDTH = 128
WEIGHT_HEAD_WIDTH = 64


@dataclass(frozen=True)
class NetConfig:
    mode: str = "video3d"
    tau: int = 2
    kernel_shape: Tuple[int, ...] = (3, 3, 3)
    width_scale: float = 0.25
    levels: int = 3
    convs_per_block: int = 2
    max_disp: float = 16.0
    blind: bool = False
    fixed_grid: bool = False
    dynamic_weights: bool = True
    groups: Optional[int] = None  # derived from the kernel when not given

    def __post_init__(self):
        object.__setattr__(self, "kernel_shape", tuple(int(k) for k in self.kernel_shape))
        errors = self.problems()
        if errors:
            raise ConfigError("invalid network configuration", errors)
        if self.groups is None:
            object.__setattr__(self, "groups", default_groups(self))

    def problems(self) -> List[str]:
        errors = []
        if self.mode not in MODES:
            errors.append(f"mode must be one of {MODES}, got {self.mode!r}")
            return errors
        if self.tau < 0:
            errors.append(f"tau must be >= 0, got {self.tau}")
        if self.mode == "image2d" and self.tau != 0:
            errors.append("image2d filters a single frame; tau must be 0")
        want = 3 if self.mode == "video3d" else 2
        if len(self.kernel_shape) != want:
            errors.append(f"{self.mode} needs a {want}-D kernel shape, got {self.kernel_shape}")
        elif any(k < 1 or k % 2 == 0 for k in self.kernel_shape):
            errors.append(f"kernel extents must be positive and odd, got {self.kernel_shape}")
        elif self.mode == "video3d" and self.kernel_shape[2] > self.frames:
            errors.append(f"temporal kernel extent {self.kernel_shape[2]} exceeds {self.frames} frames")
        if not 0.0 < self.width_scale <= 1.0:
            errors.append(f"width_scale must be in (0, 1], got {self.width_scale}")
        if self.levels < 1 or self.convs_per_block < 1:
            errors.append("levels and convs_per_block must be >= 1")
        if self.max_disp <= 0:
            errors.append(f"max_disp must be > 0, got {self.max_disp}")
        if self.fixed_grid and not self.dynamic_weights:
            errors.append("fixed_grid together with dynamic_weights=false leaves nothing to learn")
        if not errors and self.groups is not None and (self.groups < 1 or self.taps % self.groups):
            errors.append(f"groups={self.groups} must divide the tap count {self.taps}")
        return errors

    @property
    def frames(self) -> int:
        return 2 * self.tau + 1

    @property
    def input_channels(self) -> int:
        # frames plus the noise channel (zeros when blind)
        return self.frames + 1

    @property
    def downsample_factor(self) -> int:
        return 2 ** (self.levels - 1)

    def grid(self) -> RigidGrid:
        if self.mode == "video3d":
            return rigid_grid(*self.kernel_shape)
        g = rigid_grid(*self.kernel_shape)
        return per_frame_grid(g, self.tau) if self.mode == "video2d" else g

    @property
    def taps(self) -> int:
        n = 1
        for k in self.kernel_shape:
            n *= k
        return n * (self.frames if self.mode == "video2d" else 1)

    @property
    def components(self) -> int:
        return 3 if self.mode == "video3d" else 2

    def width(self, full: int) -> int:
        return max(1, int(round(full * self.width_scale)))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["kernel_shape"] = list(self.kernel_shape)
        return d

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown network config keys {unknown}")
        return cls(**data)


def default_config(mode: str = "video3d", **overrides) -> NetConfig:
    """Desk-scale defaults per filtering mode."""
    base = {
        "image2d": dict(mode="image2d", tau=0, kernel_shape=(3, 3)),
        "video2d": dict(mode="video2d", tau=2, kernel_shape=(3, 3)),
        "video3d": dict(mode="video3d", tau=2, kernel_shape=(3, 3, 3)),
    }
    if mode not in base:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    params = dict(base[mode])
    params.update(overrides)
    return NetConfig(**params)


def full_scale_config(mode: str = "video3d", **overrides) -> NetConfig:
    """Full-depth, full-width network (5 levels, three convs per block)."""
    params = dict(width_scale=1.0, levels=5, convs_per_block=3)
    if mode == "image2d" and "kernel_shape" not in overrides:
        params.update(kernel_shape=(5, 5), groups=5)
    params.update(overrides)
    return default_config(mode, **params)


def default_groups(config: NetConfig) -> int:
    """3 groups when they divide the taps, otherwise one group per kernel row."""
    return 3 if config.taps % 3 == 0 else config.kernel_shape[0]
