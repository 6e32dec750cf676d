"""Image codecs keyed by pixel format.

Formats register a reader and a writer under a short name (``png8``,
``png16``, ``pgm8``); ``load_image``/``save_image`` dispatch on that name or
infer it from the file. Pixel values are floats in [0, 1] mapped to integer
codes by ``round(v * max_code)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import ImageFormatError, MissingFileError

logger = logging.getLogger(__name__)

ReaderFn = Callable[[Path], np.ndarray]
WriterFn = Callable[[Path, np.ndarray], None]


@dataclass(frozen=True)
class Codec:
    name: str
    suffix: str
    max_code: int
    read: ReaderFn
    write: WriterFn


registry: Dict[str, Codec] = {}


def register_codec(codec: Codec) -> None:
    registry[codec.name] = codec


def get_codec(name: str) -> Codec:
    try:
        return registry[name]
    except KeyError:
        raise ImageFormatError(f"unsupported pixel format {name!r}; known: {sorted(registry)}") from None


def _open(path: Path) -> Image.Image:
    if not path.exists():
        raise MissingFileError(f"image not found: {path}")
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise ImageFormatError(f"cannot decode {path}: {e}") from e
    return img


def _max_code(img: Image.Image, path: Path) -> int:
    if img.mode in ("L", "RGB"):
        return 255
    if img.mode in ("I;16", "I;16B", "I;16L", "I"):
        return 65535
    raise ImageFormatError(f"{path}: unsupported image mode {img.mode!r}")


def _decode(img: Image.Image, max_code: int) -> np.ndarray:
    arr = np.asarray(img)
    if img.mode == "I" and arr.size and (arr.min() < 0 or arr.max() > max_code):
        raise ImageFormatError(f"pixel codes outside 0..{max_code}")
    return arr.astype(np.float64) / max_code


def _quantize(values: np.ndarray, max_code: int, dtype) -> np.ndarray:
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.rint(v * max_code).astype(dtype)


def _read_png(path: Path) -> np.ndarray:
    img = _open(path)
    return _decode(img, _max_code(img, path))


def _write_png8(path: Path, values: np.ndarray) -> None:
    Image.fromarray(_quantize(values, 255, np.uint8)).save(path, format="PNG")


def _write_png16(path: Path, values: np.ndarray) -> None:
    if np.ndim(values) != 2:
        raise ImageFormatError("16-bit PNG output is grayscale only")
    codes = _quantize(values, 65535, np.uint16)
    Image.fromarray(codes).save(path, format="PNG")


def _read_pgm(path: Path) -> np.ndarray:
    img = _open(path)
    if img.format != "PPM" or img.mode != "L":
        raise ImageFormatError(f"{path}: expected an 8-bit PGM (maxval 255), got {img.format} {img.mode}")
    return _decode(img, 255)


def _write_pgm(path: Path, values: np.ndarray) -> None:
    if np.ndim(values) != 2:
        raise ImageFormatError("PGM output is grayscale only")
    Image.fromarray(_quantize(values, 255, np.uint8)).save(path, format="PPM")


register_codec(Codec("png8", ".png", 255, _read_png, _write_png8))
register_codec(Codec("png16", ".png", 65535, _read_png, _write_png16))
register_codec(Codec("pgm8", ".pgm", 255, _read_pgm, _write_pgm))


def infer_format(path) -> str:
    """Pick a codec name from the file suffix (and bit depth for existing PNGs)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return "pgm8"
    if suffix == ".png":
        if path.exists():
            img = _open(path)
            return "png8" if _max_code(img, path) == 255 else "png16"
        return "png16"
    raise ImageFormatError(f"{path}: unsupported image suffix {suffix!r}")


def load_image(path, fmt: Optional[str] = None) -> np.ndarray:
    """Read an image as float64 in [0, 1]; grayscale -> [H,W], RGB -> [H,W,3]."""
    path = Path(path)
    codec = get_codec(fmt or infer_format(path))
    arr = codec.read(path)
    logger.debug("read image", extra={"path": str(path), "format": codec.name, "shape": list(arr.shape)})
    return arr


def save_image(path, values, fmt: Optional[str] = None) -> Path:
    path = Path(path)
    codec = get_codec(fmt or infer_format(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    codec.write(path, np.asarray(values))
    return path


def load_save_image(path, mode: str, fmt: Optional[str] = None, values=None):
    """Single entry point: ``mode='read'`` returns an array, ``mode='write'`` writes ``values``."""
    if mode == "read":
        return load_image(path, fmt)
    if mode == "write":
        if values is None:
            raise ValueError("write mode needs values")
        return save_image(path, values, fmt)
    raise ValueError(f"mode must be 'read' or 'write', got {mode!r}")
