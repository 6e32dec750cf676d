"""Training loop.

Each iteration ``p``: fetch batch ``p`` -> per-sample forward/backward on its
own tape (loss scaled by 1/batch) -> Adam at ``lr_schedule(p)``. The anneal
iteration counter and the optimizer step are the same number, so a resumed
run continues exactly where the checkpoint stopped.

The training log is tab-separated: iteration, lr, loss, regularizer weight,
wall seconds since start.
"""
from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .. import observability
from ..autograd import ops
from ..autograd.tensor import ParamStore, Tape, backward
from ..errors import ConfigError, NonFiniteError, TrainingDivergedError
from ..imaging.manifest import SequenceManifest
from ..model.checkpoint import ModelCheckpoint, check_compatible, save_checkpoint
from ..model.config import NetConfig
from ..model.network import build_network, forward_denoise_full
from .config import TrainConfig, lr_schedule
from .data_queue import Batch, SampleProducer, check_scenes
from .losses import anneal_weight, total_loss
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)

LOG_HEADER = "iteration\tlr\tloss\treg_weight\twall_s\n"


def load_training_scenes(manifest: SequenceManifest) -> List[np.ndarray]:
    scenes = [manifest.load_scene(s) for s in manifest]
    if any(s.ndim != 3 for s in scenes):
        raise ConfigError("training expects grayscale sequences")
    return scenes


def snapshot(params: ParamStore, state: AdamState, ncfg: NetConfig, tcfg: TrainConfig, **meta) -> ModelCheckpoint:
    return ModelCheckpoint(
        config=ncfg,
        parameters=params.snapshot(),
        iteration=state.step,
        optimizer_step=state.step,
        moments_m={k: v.copy() for k, v in state.m.items()},
        moments_v={k: v.copy() for k, v in state.v.items()},
        meta={"train": tcfg.to_dict(), **meta},
    )


def train_step(params: ParamStore, state: AdamState, batch: Batch, tcfg: TrainConfig, ncfg: NetConfig) -> float:
    """One optimizer step on ``batch``; returns the mean total loss."""
    p = state.step
    schedule = tcfg.schedule(ncfg.groups)
    inv = 1.0 / len(batch.samples)
    total = 0.0
    for sample in batch.samples:
        with Tape() as tape:
            out = forward_denoise_full(sample.noisy, params, ncfg, None if ncfg.blind else sample.noise_map)
            loss = total_loss(out.y, out.groups, sample.target, p, schedule)
            backward(tape, ops.scale(loss, inv))
        total += loss.item() * inv
    if not np.isfinite(total):
        raise NonFiniteError(f"loss is {total}")
    adam_step(params, state, lr_schedule(tcfg, p))
    return total


def _dump(out_dir: Path, params: ParamStore, state: AdamState, ncfg, tcfg, reason: str) -> str:
    path = out_dir / f"diverged_{state.step:07d}.ckpt"
    save_checkpoint(path, snapshot(params, state, ncfg, tcfg, diverged=reason))
    return str(path)


def train(
    dataset,
    tcfg: TrainConfig,
    ncfg: NetConfig,
    out_dir,
    resume: Optional[ModelCheckpoint] = None,
) -> ModelCheckpoint:
    """Train on ``dataset`` (a manifest or a list of display-space [H,W,T] arrays).

    Writes ``train.log``, periodic ``ckpt_<iter>.ckpt`` files and ``final.ckpt``
    under ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenes: Sequence[np.ndarray] = load_training_scenes(dataset) if isinstance(dataset, SequenceManifest) else list(dataset)
    check_scenes(scenes, tcfg, ncfg)

    if resume is not None:
        if resume.config != ncfg:
            raise ConfigError("checkpoint was trained with a different network configuration")
        check_compatible(resume, ncfg)
        params = resume.param_store()
        state = AdamState(m={k: v.copy() for k, v in resume.moments_m.items()},
                          v={k: v.copy() for k, v in resume.moments_v.items()},
                          step=resume.optimizer_step or 0)
        state.check(params)
    else:
        params = build_network(ncfg, tcfg.seed)
        state = AdamState.for_params(params)

    log_path = out_dir / "train.log"
    if not log_path.exists() or state.step == 0:
        log_path.write_text(LOG_HEADER)
    schedule = tcfg.schedule(ncfg.groups)
    started = time.perf_counter()
    logger.info("training started", extra={"mode": ncfg.mode, "start": state.step, "max_iters": tcfg.max_iters,
                                           "parameters": params.num_values()})

    with SampleProducer(scenes, tcfg, ncfg, state.step, tcfg.max_iters) as producer, log_path.open("a") as log:
        while state.step < tcfg.max_iters:
            p = state.step
            batch = producer.get(p)
            lr = lr_schedule(tcfg, p)
            reg = anneal_weight(schedule, p)
            t0 = time.perf_counter()
            try:
                loss = train_step(params, state, batch, tcfg, ncfg)
            except NonFiniteError as e:
                dump = _dump(out_dir, params, state, ncfg, tcfg, str(e))
                logger.error("training diverged", extra={"iteration": p, "dump": dump, "error": str(e)})
                raise TrainingDivergedError(f"non-finite value at iteration {p}: {e}", dump) from e
            step_s = time.perf_counter() - t0
            log.write(f"{p}\t{lr:.9e}\t{loss:.9e}\t{reg:.9e}\t{time.perf_counter() - started:.3f}\n")

            observability.TRAIN_STEPS.inc()
            observability.TRAIN_LOSS.set(loss)
            observability.TRAIN_LR.set(lr)
            observability.TRAIN_REG_WEIGHT.set(reg)
            observability.TRAIN_STEP_SECONDS.observe(step_s)
            if p % tcfg.log_every == 0:
                log.flush()
                logger.info("step", extra={"iteration": p, "lr": lr, "loss": loss, "reg_weight": reg})
            if state.step % tcfg.checkpoint_every == 0:
                save_checkpoint(out_dir / f"ckpt_{state.step:07d}.ckpt", snapshot(params, state, ncfg, tcfg))

    final = snapshot(params, state, ncfg, tcfg)
    save_checkpoint(out_dir / "final.ckpt", final)
    observability.write_metrics()
    logger.info("training finished", extra={"iterations": state.step, "out_dir": str(out_dir)})
    return final


def read_log(path) -> List[dict]:
    """Parse a training log back into records."""
    rows = []
    for line in Path(path).read_text().splitlines()[1:]:
        it, lr, loss, reg, wall = line.split("\t")
        rows.append({"iteration": int(it), "lr": float(lr), "loss": float(loss), "reg_weight": float(reg), "wall_s": float(wall)})
    return rows


def smoothed(values: Sequence[float], window: int = 100) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size < window:
        return np.array([v.mean()]) if v.size else v
    return np.convolve(v, np.ones(window) / window, mode="valid")



def smoothed_loss_ends(log_path, window: int = 100) -> Tuple[float, float]:
    """Smoothed loss over the first and the last ``window`` logged iterations."""
    curve = smoothed([row["loss"] for row in read_log(log_path)], window)
    return float(curve[0]), float(curve[-1])
