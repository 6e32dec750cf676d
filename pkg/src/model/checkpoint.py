"""Self-describing checkpoint container.

    b"DDNCKPT1" | uint64 LE header length | JSON header | float64 LE blocks

The header carries the network config, iteration, optimizer step, free-form
metadata and the ordered list of blocks (name and shape). Block names are
``param/<name>``, ``adam_m/<name>`` and ``adam_v/<name>``. Headers are written
with sorted keys, so loading and re-saving a file reproduces it byte for byte.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..autograd.tensor import ParamStore
from ..errors import ConfigError, MissingFileError
from .config import NetConfig
from .network import layer_specs

MAGIC = b"DDNCKPT1"
_LEN = struct.Struct("<Q")


@dataclass
class ModelCheckpoint:
    config: NetConfig
    parameters: Dict[str, np.ndarray]
    iteration: int = 0
    optimizer_step: Optional[int] = None
    moments_m: Dict[str, np.ndarray] = field(default_factory=dict)
    moments_v: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def param_store(self) -> ParamStore:
        store = ParamStore()
        for name, value in self.parameters.items():
            store.add(name, value)
        return store


def _blocks(ckpt: ModelCheckpoint):
    for prefix, group in (("param", ckpt.parameters), ("adam_m", ckpt.moments_m), ("adam_v", ckpt.moments_v)):
        for name, arr in group.items():
            yield f"{prefix}/{name}", np.ascontiguousarray(arr, dtype="<f8")


def to_bytes(ckpt: ModelCheckpoint) -> bytes:
    blocks = list(_blocks(ckpt))
    header = {
        "config": ckpt.config.to_dict(),
        "iteration": int(ckpt.iteration),
        "optimizer_step": ckpt.optimizer_step,
        "meta": ckpt.meta,
        "blocks": [{"name": name, "shape": list(arr.shape)} for name, arr in blocks],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([MAGIC, _LEN.pack(len(head)), head] + [arr.tobytes() for _, arr in blocks])


def from_bytes(data: bytes) -> ModelCheckpoint:
    if data[:len(MAGIC)] != MAGIC:
        raise ConfigError("not a checkpoint file (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + _LEN.size:
        raise ConfigError("truncated checkpoint")
    (size,) = _LEN.unpack_from(data, offset)
    offset += _LEN.size
    try:
        header = json.loads(data[offset:offset + size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"corrupt checkpoint header: {e}") from e
    missing = {"config", "iteration", "optimizer_step", "meta", "blocks"} - set(header)
    if missing:
        raise ConfigError(f"checkpoint header lacks {sorted(missing)}")
    offset += size
    groups: Dict[str, Dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
    for block in header["blocks"]:
        prefix, _, name = block["name"].partition("/")
        shape = tuple(block["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(data) or prefix not in groups:
            raise ConfigError(f"corrupt checkpoint block {block['name']!r}")
        groups[prefix][name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise ConfigError("trailing bytes after checkpoint blocks")
    return ModelCheckpoint(
        config=NetConfig.from_dict(header["config"]),
        parameters=groups["param"],
        iteration=header["iteration"],
        optimizer_step=header["optimizer_step"],
        moments_m=groups["adam_m"],
        moments_v=groups["adam_v"],
        meta=header["meta"],
    )


def save_checkpoint(path, ckpt: ModelCheckpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(to_bytes(ckpt))
    tmp.replace(path)
    return path


def load_checkpoint(path) -> ModelCheckpoint:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"checkpoint not found: {path}")
    return from_bytes(path.read_bytes())


def check_compatible(ckpt: ModelCheckpoint, config: NetConfig) -> None:
    """Raise ConfigError when ``config`` would build a different parameter set."""
    expected = {}
    for spec in layer_specs(config):
        expected[f"{spec.name}.w"] = (spec.cout, spec.cin, 3, 3)
        expected[f"{spec.name}.b"] = (spec.cout,)
    actual = {name: arr.shape for name, arr in ckpt.parameters.items()}
    if expected != actual:
        raise ConfigError("checkpoint parameters do not match the requested network configuration")
