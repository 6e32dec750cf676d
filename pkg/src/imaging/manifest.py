"""Line-oriented sequence manifests.

    # format=png16
    # sigma_s=0.0025
    scene_0000<TAB>scene_0000/frame_0000.png,scene_0000/frame_0001.png,...

Header lines are ``# key=value``; frame paths are relative to the manifest's
directory. A trailing integer in a frame's file stem is its declared index.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np

from ..errors import ConfigError, MissingFileError
from .codecs import get_codec, load_image

_INDEX = re.compile(r"(\d+)$")


@dataclass
class SceneEntry:
    scene_id: str
    frames: List[Path]

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class SequenceManifest:
    scenes: List[SceneEntry]
    pixel_format: str = "png16"
    root: Path = Path(".")
    header: Dict[str, str] = field(default_factory=dict)

    def __iter__(self) -> Iterator[SceneEntry]:
        return iter(self.scenes)

    def __len__(self) -> int:
        return len(self.scenes)

    def resolve(self, frame: Path) -> Path:
        return frame if frame.is_absolute() else self.root / frame

    def load_scene(self, scene: SceneEntry) -> np.ndarray:
        """Frames stacked on the last axis: [H,W,T] (or [H,W,C,T] for colour)."""
        frames = [load_image(self.resolve(f), self.pixel_format) for f in scene.frames]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise ConfigError(f"scene {scene.scene_id}: frames differ in size {sorted(shapes)}")
        return np.stack(frames, axis=-1)

    def validate(self, check_files: bool = True) -> List[str]:
        errors: List[str] = []
        get_codec(self.pixel_format)
        seen = set()
        for scene in self.scenes:
            if scene.scene_id in seen:
                errors.append(f"duplicate scene id {scene.scene_id!r}")
            seen.add(scene.scene_id)
            if not scene.frames:
                errors.append(f"scene {scene.scene_id}: no frames")
                continue
            indices = [_declared_index(f) for f in scene.frames]
            if None not in indices and any(b <= a for a, b in zip(indices, indices[1:])):
                errors.append(f"scene {scene.scene_id}: frame indices not strictly increasing {indices}")
            if check_files:
                missing = [str(f) for f in scene.frames if not self.resolve(f).exists()]
                if missing:
                    errors.append(f"scene {scene.scene_id}: missing frames {missing}")
        return errors


def _declared_index(path: Path) -> Optional[int]:
    m = _INDEX.search(path.stem)
    return int(m.group(1)) if m else None


def read_manifest(path, check_files: bool = True) -> SequenceManifest:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"manifest not found: {path}")
    header: Dict[str, str] = {}
    scenes: List[SceneEntry] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                header[key.strip()] = value.strip()
            continue
        scene_id, sep, frames = raw.partition("\t")
        if not sep or not frames.strip():
            raise ConfigError(f"{path}:{lineno}: expected '<scene id>\\t<frame>,<frame>,...'")
        scenes.append(SceneEntry(scene_id.strip(), [Path(p.strip()) for p in frames.split(",") if p.strip()]))
    manifest = SequenceManifest(scenes, header.get("format", "png16"), path.parent, header)
    errors = manifest.validate(check_files)
    if errors:
        raise ConfigError(f"invalid manifest {path}", errors)
    return manifest


def write_manifest(path, manifest: SequenceManifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = dict(manifest.header)
    header["format"] = manifest.pixel_format
    lines = [f"# {k}={header[k]}" for k in sorted(header)]
    for scene in manifest.scenes:
        rel = [f.as_posix() for f in scene.frames]
        lines.append(f"{scene.scene_id}\t{','.join(rel)}")
    path.write_text("\n".join(lines) + "\n")
    return path
