"""Training configuration and the key=value contract.

A config file is flat text::

    # desk-scale video run
    mode = video3d
    width_scale = 0.25
    max_iters = 2000

``CONTRACT`` lists every accepted key with its type and range; ``validate``
returns ``(values, errors)`` and reports every problem at once.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

from ..errors import ConfigError, MissingFileError
from ..imaging.noise import PRESETS
from ..model.config import MODES, NetConfig, default_config
from .losses import AnnealSchedule

CONTRACT: Dict[str, Any] = {
    "contract_version": "1.0",
    "fields": {
        # network
        "mode": {"type": "choice", "choices": list(MODES), "section": "net"},
        "tau": {"type": "integer", "minimum": 0, "section": "net"},
        "kernel_shape": {"type": "shape", "section": "net"},
        "width_scale": {"type": "real", "minimum": 1e-6, "maximum": 1.0, "section": "net"},
        "levels": {"type": "integer", "minimum": 1, "maximum": 5, "section": "net"},
        "convs_per_block": {"type": "integer", "minimum": 1, "section": "net"},
        "max_disp": {"type": "real", "minimum": 1e-6, "section": "net"},
        "blind": {"type": "boolean", "section": "net"},
        "fixed_grid": {"type": "boolean", "section": "net"},
        "dynamic_weights": {"type": "boolean", "section": "net"},
        "groups": {"type": "integer", "minimum": 1, "section": "net"},
        # optimisation
        "batch_size": {"type": "integer", "minimum": 1, "section": "train"},
        "patch": {"type": "integer", "minimum": 1, "section": "train"},
        "lr_init": {"type": "real", "minimum": 0.0, "section": "train"},
        "lr_decay": {"type": "real", "minimum": 0.0, "maximum": 1.0, "section": "train"},
        "lr_floor": {"type": "real", "minimum": 0.0, "section": "train"},
        "max_iters": {"type": "integer", "minimum": 0, "section": "train"},
        "seed": {"type": "integer", "minimum": 0, "section": "train"},
        "anneal": {"type": "boolean", "section": "train"},
        "eta": {"type": "real", "minimum": 0.0, "section": "train"},
        "gamma_decay": {"type": "real", "minimum": 0.0, "maximum": 1.0, "section": "train"},
        "noise": {"type": "choice", "choices": ["random"] + sorted(PRESETS), "section": "train"},
        "checkpoint_every": {"type": "integer", "minimum": 1, "section": "train"},
        "log_every": {"type": "integer", "minimum": 1, "section": "train"},
        "prefetch": {"type": "integer", "minimum": 1, "section": "train"},
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4
    patch: int = 32
    lr_init: float = 2e-4
    lr_decay: float = 0.999991
    lr_floor: float = 1e-4
    max_iters: int = 2000
    seed: int = 0
    anneal: bool = True
    eta: float = 100.0
    gamma_decay: float = 0.9998
    noise: str = "random"
    checkpoint_every: int = 500
    log_every: int = 10
    prefetch: int = 4

    def schedule(self, groups: int) -> AnnealSchedule:
        return AnnealSchedule(self.eta, self.gamma_decay, groups, self.anneal)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def lr_schedule(config: TrainConfig, iteration: int) -> float:
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    return max(config.lr_floor, config.lr_init * config.lr_decay ** iteration)


def get_contract() -> Dict[str, Any]:
    return CONTRACT


def _coerce(key: str, raw: Any, spec: Dict[str, Any]) -> Any:
    kind = spec["type"]
    text = str(raw).strip()
    if kind == "integer":
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"{key} must be integer, got {text!r}") from None
    elif kind == "real":
        try:
            value = float(text)
        except ValueError:
            raise ValueError(f"{key} must be a number, got {text!r}") from None
    elif kind == "boolean":
        if isinstance(raw, bool):
            return raw
        if text.lower() not in _TRUE | _FALSE:
            raise ValueError(f"{key} must be true/false, got {text!r}")
        return text.lower() in _TRUE
    elif kind == "choice":
        if text not in spec["choices"]:
            raise ValueError(f"{key} must be one of {spec['choices']}, got {text!r}")
        return text
    elif kind == "shape":
        if isinstance(raw, (tuple, list)):
            return tuple(int(k) for k in raw)
        try:
            return tuple(int(k) for k in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"{key} must look like 3x3 or 3x3x3, got {text!r}") from None
    else:
        raise ValueError(f"{key}: unknown contract type {kind!r}")
    if "minimum" in spec and value < spec["minimum"]:
        raise ValueError(f"{key} must be >= {spec['minimum']}, got {value}")
    if "maximum" in spec and value > spec["maximum"]:
        raise ValueError(f"{key} must be <= {spec['maximum']}, got {value}")
    return value


def validate(raw: Dict[str, Any]) -> Tuple[Dict[str, Any], List[str]]:
    """Coerce ``raw`` against the contract; returns (values, errors)."""
    values: Dict[str, Any] = {}
    errors: List[str] = []
    for key, value in raw.items():
        spec = CONTRACT["fields"].get(key)
        if spec is None:
            errors.append(f"unknown key {key!r}")
            continue
        try:
            values[key] = _coerce(key, value, spec)
        except ValueError as e:
            errors.append(str(e))
    return values, errors


def parse_assignments(lines: Iterable[str], source: str = "<config>") -> Tuple[Dict[str, str], List[str]]:
    raw: Dict[str, str] = {}
    errors: List[str] = []
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            errors.append(f"{source}:{lineno}: expected key = value, got {line.strip()!r}")
            continue
        raw[key.strip()] = value.strip()
    return raw, errors


def read_config_file(path) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"config file not found: {path}")
    raw, errors = parse_assignments(path.read_text().splitlines(), str(path))
    if errors:
        raise ConfigError(f"malformed config file {path}", errors)
    return raw


def build_configs(raw: Dict[str, Any]) -> Tuple[TrainConfig, NetConfig]:
    """Validate merged key=value settings and build both configs (ConfigError on any problem)."""
    values, errors = validate(raw)
    if errors:
        raise ConfigError("invalid configuration", errors)
    fields_ = CONTRACT["fields"]
    train = {k: v for k, v in values.items() if fields_[k]["section"] == "train"}
    net = {k: v for k, v in values.items() if fields_[k]["section"] == "net"}
    tcfg = TrainConfig(**train)
    ncfg = default_config(net.pop("mode", "video3d"), **net)
    if tcfg.patch % ncfg.downsample_factor:
        raise ConfigError("invalid configuration", [f"patch {tcfg.patch} must be divisible by {ncfg.downsample_factor}"])
    if tcfg.lr_floor > tcfg.lr_init:
        raise ConfigError("invalid configuration", ["lr_floor must not exceed lr_init"])
    return tcfg, ncfg
