"""Training-sample synthesis and a bounded prefetch queue.

Batch ``p`` is built from ``default_rng([seed, p])`` only, so any iteration
can be regenerated exactly (which is what makes resume deterministic). A
single producer thread fills the queue in iteration order.
"""
from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..imaging.gamma import gamma_inverse
from ..imaging.noise import NoiseParams, noise_channel, preset, sample_noise_params, synthesize_noise
from ..model.config import NetConfig
from .config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class TrainingSample:
    noisy: np.ndarray  # [P,P,T] linear
    noise_map: np.ndarray  # [P,P]
    target: np.ndarray  # [P,P] clean linear reference frame
    params: NoiseParams


@dataclass
class Batch:
    iteration: int
    samples: List[TrainingSample]


def crop_origin(h: int, w: int, patch: int, rng: np.random.Generator):
    if patch > h or patch > w:
        raise ValueError(f"patch {patch} larger than frame {h}x{w}")
    return int(rng.integers(0, h - patch + 1)), int(rng.integers(0, w - patch + 1))


def crop_patch(sequence, patch: int, seed) -> np.ndarray:
    """Same spatial window from every frame; ``seed`` is an int or a Generator."""
    seq = np.asarray(sequence)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    y, x = crop_origin(seq.shape[0], seq.shape[1], patch, rng)
    return seq[y:y + patch, x:x + patch]


def check_scenes(scenes: Sequence[np.ndarray], tcfg: TrainConfig, ncfg: NetConfig) -> None:
    if not scenes:
        raise ConfigError("training needs at least one scene")
    problems = []
    for i, s in enumerate(scenes):
        if s.ndim != 3:
            problems.append(f"scene {i}: expected [H,W,T] grayscale frames, got {s.shape}")
        elif s.shape[2] < ncfg.frames:
            problems.append(f"scene {i}: {s.shape[2]} frames, need {ncfg.frames}")
        elif min(s.shape[:2]) < tcfg.patch:
            problems.append(f"scene {i}: {s.shape[:2]} smaller than patch {tcfg.patch}")
    if problems:
        raise ConfigError("training data incompatible with the configuration", problems)


def make_sample(scene: np.ndarray, tcfg: TrainConfig, ncfg: NetConfig, rng: np.random.Generator) -> TrainingSample:
    """``scene`` holds display-space frames [H,W,T_scene]."""
    start = int(rng.integers(0, scene.shape[2] - ncfg.frames + 1))
    window = scene[:, :, start:start + ncfg.frames]
    clean = gamma_inverse(crop_patch(window, tcfg.patch, rng))
    if tcfg.noise == "random":
        params = sample_noise_params(rng, blind=ncfg.blind)
    else:
        params = preset(tcfg.noise, blind=ncfg.blind)
    noisy = synthesize_noise(clean, params, seed=int(rng.integers(2 ** 63 - 1)))
    return TrainingSample(noisy, noise_channel(noisy[:, :, ncfg.tau], params), clean[:, :, ncfg.tau], params)


def make_batch(scenes: Sequence[np.ndarray], tcfg: TrainConfig, ncfg: NetConfig, iteration: int) -> Batch:
    rng = np.random.default_rng([tcfg.seed, iteration])
    samples = []
    for _ in range(tcfg.batch_size):
        scene = scenes[int(rng.integers(len(scenes)))]
        samples.append(make_sample(scene, tcfg, ncfg, rng))
    return Batch(iteration, samples)


class SampleProducer:
    """Background producer of batches ``start .. stop-1`` through a bounded queue."""

    def __init__(self, scenes: Sequence[np.ndarray], tcfg: TrainConfig, ncfg: NetConfig, start: int, stop: int):
        self.scenes = scenes
        self.tcfg = tcfg
        self.ncfg = ncfg
        self.start_iteration = start
        self.stop_iteration = stop
        self._queue: "queue.Queue" = queue.Queue(maxsize=tcfg.prefetch)
        self._stop_event: Optional[threading.Event] = None
        self._thread: Optional[threading.Thread] = None

    def _run(self) -> None:
        for p in range(self.start_iteration, self.stop_iteration):
            if self._stop_event.is_set():
                return
            try:
                item = make_batch(self.scenes, self.tcfg, self.ncfg, p)
            except Exception as e:  # surfaced to the consumer
                logger.exception("sample synthesis failed", extra={"iteration": p})
                item = e
            while not self._stop_event.is_set():
                try:
                    self._queue.put(item, timeout=0.1)
                    break
                except queue.Full:
                    continue
            if isinstance(item, Exception):
                return

    def start(self) -> "SampleProducer":
        if self._stop_event and not self._stop_event.is_set():
            return self
        self._stop_event = threading.Event()
        self._thread = threading.Thread(target=self._run, name="sample-producer", daemon=True)
        self._thread.start()
        return self

    def get(self, iteration: int) -> Batch:
        item = self._queue.get()
        if isinstance(item, Exception):
            raise item
        if item.iteration != iteration:
            raise RuntimeError(f"producer out of order: expected batch {iteration}, got {item.iteration}")
        return item

    def stop(self) -> None:
        if self._stop_event:
            self._stop_event.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "SampleProducer":
        return self.start()

    def __exit__(self, exc_type, exc, tb):
        self.stop()
        return False
