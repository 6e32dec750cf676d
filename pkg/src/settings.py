from __future__ import annotations

import logging
import os
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]

LOG_LEVEL = os.environ.get("DEFORMDENOISE_LOG_LEVEL", "INFO").upper()
METRICS_FILE = os.environ.get("DEFORMDENOISE_METRICS_FILE") or None
WORKDIR = Path(os.environ.get("DEFORMDENOISE_WORKDIR", str(ROOT / "runs")))

# Training always runs in float64; inference may opt into float32.
TRAIN_DTYPE = np.float64
_INFERENCE_DTYPES = {"float64": np.float64, "float32": np.float32}


def inference_dtype() -> type:
    name = os.environ.get("DEFORMDENOISE_INFERENCE_DTYPE", "float64").lower()
    if name not in _INFERENCE_DTYPES:
        raise ValueError(f"DEFORMDENOISE_INFERENCE_DTYPE must be one of {sorted(_INFERENCE_DTYPES)}, got {name!r}")
    return _INFERENCE_DTYPES[name]


def log_level() -> int:
    return getattr(logging, LOG_LEVEL, logging.INFO)
