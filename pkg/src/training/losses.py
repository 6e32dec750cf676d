"""Gamma-space L1 loss and the annealed group regulariser."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..autograd import ops
from ..autograd.tensor import Tensor, as_tensor, make_result
from ..errors import ShapeError
from ..imaging.gamma import SRGB, GammaParams


def srgb(x, params: GammaParams = SRGB) -> Tensor:
    """Differentiable sRGB transfer. Values at or below the threshold (negatives
    included) stay on the linear branch; values above 1 follow the power curve."""
    x = as_tensor(x)
    lin = x.data <= params.threshold
    base = np.maximum(x.data, params.threshold)
    powed = np.power(base, params.exponent)
    out = np.where(lin, params.linear_slope * x.data, (1.0 + params.alpha) * powed - params.alpha)
    slope = np.where(lin, params.linear_slope, (1.0 + params.alpha) * params.exponent * powed / base)
    return make_result("srgb", out, (x,), lambda g: (g * slope,))


def l1_gamma_loss(y, y_gt) -> Tensor:
    y, y_gt = as_tensor(y), as_tensor(y_gt)
    if y.shape != y_gt.shape:
        raise ShapeError(f"prediction {y.shape} and target {y_gt.shape} differ in shape")
    return ops.mean_all(ops.absolute(ops.sub(srgb(y), srgb(y_gt))))


@dataclass(frozen=True)
class AnnealSchedule:
    eta: float = 100.0
    gamma_decay: float = 0.9998
    groups: int = 3
    enabled: bool = True


def anneal_weight(schedule: AnnealSchedule, p: int) -> float:
    if p < 0:
        raise ValueError(f"iteration must be >= 0, got {p}")
    if not schedule.enabled:
        return 0.0
    return schedule.eta * schedule.gamma_decay ** p


def total_loss(y, y_groups: Sequence, y_gt, p: int, schedule: AnnealSchedule) -> Tensor:
    """``l(Y) + eta * gamma**p * mean_i l(Y_i)``."""
    if len(y_groups) != schedule.groups:
        raise ShapeError(f"expected {schedule.groups} group outputs, got {len(y_groups)}")
    base = l1_gamma_loss(y, y_gt)
    weight = anneal_weight(schedule, p)
    if weight == 0.0:
        return base
    reg = None
    for g in y_groups:
        term = l1_gamma_loss(g, y_gt)
        reg = term if reg is None else ops.add(reg, term)
    return ops.add(base, ops.scale(reg, weight / len(y_groups)))
