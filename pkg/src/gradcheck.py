"""Finite-difference verification of every differentiable operation.

Each check draws random inputs, projects the op's output onto a fixed random
tensor to get a scalar, and compares tape gradients against central
differences on a few randomly chosen entries of every input. Sample
coordinates are kept at least 0.1 away from integers (where the interpolant
has kinks) and activation inputs away from their kinks.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from . import observability
from .autograd import ops
from .autograd.tensor import ParamStore, Tape, Tensor, backward
from .errors import GradcheckFailed
from .model.config import NetConfig
from .model.network import build_network, forward_denoise_full
from .sampling import deform_sample, filter2d_deformable, filter3d_deformable, group_outputs, rigid_grid
from .training.losses import AnnealSchedule, l1_gamma_loss, srgb, total_loss

logger = logging.getLogger(__name__)

STEP = 1e-6
DENOM_FLOOR = 1e-4


@dataclass
class GradcheckResult:
    op: str
    worst: float
    threshold: float
    checks: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst < self.threshold)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), DENOM_FLOOR)


def _project(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.sum_all(ops.mul_const(out, weights))


def fd_check(build: Callable[[Dict[str, Tensor]], Tensor], arrays: Dict[str, np.ndarray],
             rng: np.random.Generator, probes: int = 4, step: float = STEP) -> float:
    """Worst relative error of d build / d arrays[k] over ``probes`` entries per input."""
    leaves = {k: Tensor(v.copy(), requires_grad=True) for k, v in arrays.items()}
    with Tape() as tape:
        backward(tape, build(leaves))
    worst = 0.0
    for key, value in arrays.items():
        grad = leaves[key].grad
        grad = np.zeros_like(value) if grad is None else grad
        for flat in rng.choice(value.size, size=min(probes, value.size), replace=False):
            idx = np.unravel_index(int(flat), value.shape)

            def at(delta):
                trial = {k: Tensor(v) for k, v in arrays.items()}
                bumped = value.copy()
                bumped[idx] += delta
                trial[key] = Tensor(bumped)
                return build(trial).item()

            numeric = (at(step) - at(-step)) / (2 * step)
            worst = max(worst, relative_error(float(grad[idx]), numeric))
    return worst


def fd_check_params(loss_fn: Callable[[ParamStore], Tensor], params: ParamStore,
                    rng: np.random.Generator, probes: int = 2, step: float = STEP) -> float:
    for _, t in params.items():
        t.grad = None
    with Tape() as tape:
        backward(tape, loss_fn(params))
    worst = 0.0
    for name, t in params.items():
        grad = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        for flat in rng.choice(t.size, size=min(probes, t.size), replace=False):
            idx = np.unravel_index(int(flat), t.shape)
            original = t.data[idx]
            t.data[idx] = original + step
            up = loss_fn(params).item()
            t.data[idx] = original - step
            down = loss_fn(params).item()
            t.data[idx] = original
            worst = max(worst, relative_error(float(grad[idx]), (up - down) / (2 * step)))
    return worst


def _fractional(rng, shape, low=-2, high=2) -> np.ndarray:
    """Offsets whose fractional part lies in [0.1, 0.9]."""
    return rng.integers(low, high, size=shape) + rng.uniform(0.1, 0.9, size=shape)


def _away_from(rng, shape, kink: float, margin: float = 0.1, spread: float = 1.0) -> np.ndarray:
    x = rng.uniform(margin, spread, size=shape)
    return kink + np.where(rng.random(shape) < 0.5, -x, x)


def check_sampler(rng) -> float:
    grid = rigid_grid(3, 3, 3)
    h, w, t = 5, 4, 3
    arrays = {"x": rng.standard_normal((h, w, t)), "v": _fractional(rng, (h, w, grid.n, 3))}
    proj = rng.standard_normal((h, w, grid.n))
    return fd_check(lambda a: _project(deform_sample(a["x"], a["v"], grid), proj), arrays, rng)


def check_filter3d(rng) -> float:
    grid = rigid_grid(3, 3, 3)
    h, w = 4, 5
    arrays = {
        "x": rng.standard_normal((h, w, 3)),
        "v": _fractional(rng, (h, w, grid.n, 3)),
        "f": rng.standard_normal((h, w, grid.n)),
    }
    proj = rng.standard_normal((h, w))
    return fd_check(lambda a: _project(filter3d_deformable(a["x"], grid, a["v"], a["f"]), proj), arrays, rng)


def check_filter2d(rng) -> float:
    grid = rigid_grid(3, 3)
    h, w = 5, 5
    arrays = {
        "x": rng.standard_normal((h, w)),
        "v": _fractional(rng, (h, w, grid.n, 2)),
        "f": rng.standard_normal((h, w, grid.n)),
    }
    proj = rng.standard_normal((h, w))
    return fd_check(lambda a: _project(filter2d_deformable(a["x"], grid, a["v"], a["f"]), proj), arrays, rng)


def check_groups(rng) -> float:
    grid = rigid_grid(3, 3, 3)
    h, w = 4, 4
    arrays = {
        "x": rng.standard_normal((h, w, 3)),
        "v": _fractional(rng, (h, w, grid.n, 3)),
        "f": rng.standard_normal((h, w, grid.n)),
    }
    projs = [rng.standard_normal((h, w)) for _ in range(3)]

    def build(a):
        outs = group_outputs(deform_sample(a["x"], a["v"], grid), a["f"], 3)
        total = _project(outs[0], projs[0])
        for out, p in zip(outs[1:], projs[1:]):
            total = ops.add(total, _project(out, p))
        return total

    return fd_check(build, arrays, rng)


def check_conv2d(rng) -> float:
    arrays = {
        "x": rng.standard_normal((3, 6, 5)),
        "w": rng.standard_normal((4, 3, 3, 3)),
        "b": rng.standard_normal(4),
    }
    proj = rng.standard_normal((4, 6, 5))
    return fd_check(lambda a: _project(ops.conv2d(a["x"], a["w"], a["b"]), proj), arrays, rng)


def check_activations(rng) -> float:
    proj = rng.standard_normal((2, 4, 4))
    worst = fd_check(lambda a: _project(ops.relu(a["x"]), proj), {"x": _away_from(rng, (2, 4, 4), 0.0)}, rng)
    return max(worst, fd_check(lambda a: _project(ops.tanh(a["x"]), proj), {"x": rng.standard_normal((2, 4, 4))}, rng))


def check_resample(rng) -> float:
    x = rng.standard_normal((2, 4, 6))
    down, up = rng.standard_normal((2, 2, 3)), rng.standard_normal((2, 8, 12))
    worst = fd_check(lambda a: _project(ops.resample2x(a["x"], "down"), down), {"x": x}, rng)
    return max(worst, fd_check(lambda a: _project(ops.resample2x(a["x"], "up"), up), {"x": x}, rng))


def check_srgb(rng) -> float:
    x = rng.uniform(0.02, 1.2, size=(4, 4))
    x[0] = [-0.2, -0.05, 0.001, 0.002]  # linear branch, including below zero
    proj = rng.standard_normal((4, 4))
    return fd_check(lambda a: _project(srgb(a["x"]), proj), {"x": x}, rng)


def check_losses(rng) -> float:
    gt = rng.uniform(0.1, 0.9, size=(6, 6))
    arrays = {"y": gt + _away_from(rng, (6, 6), 0.0, margin=0.02, spread=0.1)}
    for g in range(3):
        arrays[f"g{g}"] = gt + _away_from(rng, (6, 6), 0.0, margin=0.02, spread=0.1)
    schedule = AnnealSchedule(groups=3)
    worst = fd_check(lambda a: l1_gamma_loss(a["y"], gt), {"y": arrays["y"]}, rng)
    return max(worst, fd_check(
        lambda a: total_loss(a["y"], [a["g0"], a["g1"], a["g2"]], gt, 10, schedule), arrays, rng))


def gradcheck_config(mode: str = "video3d") -> NetConfig:
    shapes = {"image2d": (0, (3, 3)), "video2d": (1, (3, 3)), "video3d": (1, (3, 3, 3))}
    tau, kernel = shapes[mode]
    return NetConfig(mode=mode, tau=tau, kernel_shape=kernel, width_scale=0.1, levels=2,
                     convs_per_block=1, max_disp=1.0, groups=3)


def check_network(rng, mode: str = "video3d", size: int = 8) -> float:
    """End-to-end parameter gradients of the total loss on a toy input."""
    config = gradcheck_config(mode)
    params = build_network(config, seed=int(rng.integers(1 << 31)))
    # centre the offsets away from integer sampling positions
    if "offset_out.b" in params:
        params["offset_out.b"].data[:] = np.arctanh(0.45)
    x = rng.uniform(0.1, 0.9, size=(size, size, config.frames))
    noise = np.full((size, size), 0.02)
    gt = np.clip(x[:, :, config.tau] + 0.05 * rng.standard_normal((size, size)), 0.0, 1.0)
    schedule = AnnealSchedule(groups=config.groups)

    def loss_fn(p):
        out = forward_denoise_full(x, p, config, noise)
        return total_loss(out.y, out.groups, gt, 5, schedule)

    return fd_check_params(loss_fn, params, rng)


CHECKS: Dict[str, tuple] = {
    "trilinear": (check_sampler, 1e-4),
    "filter2d": (check_filter2d, 1e-4),
    "filter3d": (check_filter3d, 1e-4),
    "filter_group": (check_groups, 1e-4),
    "conv2d": (check_conv2d, 1e-4),
    "activation": (check_activations, 1e-4),
    "resample2x": (check_resample, 1e-4),
    "srgb": (check_srgb, 1e-4),
    "loss": (check_losses, 1e-4),
    "network": (check_network, 1e-3),
}


def run_suite(seed: int = 0, instances: int = 3, ops_: Optional[List[str]] = None) -> List[GradcheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name in ops_ or list(CHECKS):
        fn, threshold = CHECKS[name]
        worst = max(fn(rng) for _ in range(instances))
        results.append(GradcheckResult(name, worst, threshold, instances))
        observability.GRADCHECK_WORST.labels(op=name).set(worst)
        logger.info("gradcheck", extra={"op": name, "worst": worst, "threshold": threshold})
    return results


def require_pass(results: List[GradcheckResult]) -> None:
    failed = [r for r in results if not r.passed]
    if failed:
        detail = ", ".join(f"{r.op}={r.worst:.3e}" for r in failed)
        raise GradcheckFailed(f"gradient checks failed: {detail}")
