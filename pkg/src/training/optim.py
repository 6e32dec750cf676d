from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from ..autograd.tensor import ParamStore
from ..errors import MissingGradientError, ShapeError


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamStore, **kwargs) -> "AdamState":
        m = {name: np.zeros_like(t.data) for name, t in params.items()}
        v = {name: np.zeros_like(t.data) for name, t in params.items()}
        return cls(m=m, v=v, **kwargs)

    def check(self, params: ParamStore) -> None:
        for name, t in params.items():
            if name not in self.m or name not in self.v:
                raise ShapeError(f"optimizer state has no moments for {name!r}")
            if self.m[name].shape != t.shape or self.v[name].shape != t.shape:
                raise ShapeError(f"moment shapes for {name!r} do not match the parameter")


def adam_step(params: ParamStore, state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update in place; gradients are zeroed afterwards."""
    missing = [name for name in params if params.gradient(name) is None]
    if missing:
        raise MissingGradientError(f"no gradient for {missing}")
    state.check(params)
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = p.grad
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.grad = np.zeros_like(p.data)
