"""Minimal dense tensors with reverse-mode differentiation."""

from .tensor import ParamStore, Tape, Tensor, active_tape, as_tensor, backward, make_result
from .ops import (
    absolute,
    activation,
    add,
    concat,
    conv2d,
    mean_all,
    mul,
    mul_const,
    relu,
    resample2x,
    reshape,
    scale,
    sub,
    sum_all,
    tanh,
    transpose,
)

__all__ = [
    'ParamStore',
    'Tape',
    'Tensor',
    'active_tape',
    'as_tensor',
    'backward',
    'make_result',
    'absolute',
    'activation',
    'add',
    'concat',
    'conv2d',
    'mean_all',
    'mul',
    'mul_const',
    'relu',
    'resample2x',
    'reshape',
    'scale',
    'sub',
    'sum_all',
    'tanh',
    'transpose',
]
