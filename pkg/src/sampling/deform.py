"""Rigid grids and deformable filtering.

Every filtering mode reduces to the same two steps:

1. ``deform_sample`` reads the input at ``(y + ŷ_n + V_y, x + x̂_n + V_x, t̂_n [+ V_t])``
   for each output pixel and tap, giving ``S[H, W, N]``;
2. ``tap_sum`` forms ``Y = factor * sum_n S[..., n] * F[..., n]`` over all taps or
   over one contiguous block of taps.

Offset components are ordered (x, y[, t]).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autograd import ops
from ..autograd.tensor import Tensor, as_tensor, make_result
from ..errors import ShapeError
from .trilinear import sample_trilinear_many, sample_trilinear_many_backward


@dataclass(frozen=True, eq=False)
class RigidGrid:
    """Tap lattice centred at the origin.

    ``taps`` is an ``[N, 3]`` array of ``(ŷ, x̂, t̂)``; ``components`` is the
    number of offset components predicted per tap (2 for spatial kernels, 3 for
    spatio-temporal ones).
    """
    taps: np.ndarray
    kernel_shape: Tuple[int, ...]
    components: int

    @property
    def n(self) -> int:
        return int(self.taps.shape[0])

    @property
    def is_3d(self) -> bool:
        return self.components == 3

    def coordinates(self) -> List[Tuple[int, ...]]:
        cols = 3 if self.is_3d else 2
        return [tuple(int(v) for v in row[:cols]) for row in self.taps]


def rigid_grid(kh: int, kw: int, kt: Optional[int] = None) -> RigidGrid:
    sizes = (kh, kw) if kt is None else (kh, kw, kt)
    for k in sizes:
        if k < 1 or k % 2 == 0:
            raise ValueError(f"kernel extents must be positive and odd, got {sizes}")
    axes = [np.arange(k) - k // 2 for k in sizes]
    if kt is None:
        axes.append(np.zeros(1))
    mesh = np.meshgrid(*axes, indexing="ij")
    taps = np.stack([m.reshape(-1) for m in mesh], axis=1).astype(np.float64)
    return RigidGrid(taps=taps, kernel_shape=sizes, components=2 if kt is None else 3)


def per_frame_grid(grid: RigidGrid, tau: int) -> RigidGrid:
    """Replicate a 2D grid on every frame offset -tau..tau (frame-major blocks)."""
    if grid.is_3d:
        raise ValueError("per-frame grids are built from a 2D grid")
    blocks = []
    for t in range(-tau, tau + 1):
        block = grid.taps.copy()
        block[:, 2] = t
        blocks.append(block)
    return RigidGrid(taps=np.concatenate(blocks, axis=0), kernel_shape=grid.kernel_shape + (2 * tau + 1,), components=2)


def _sample_coords(h: int, w: int, grid: RigidGrid, v: np.ndarray):
    ys = np.arange(h, dtype=v.dtype)[:, None, None] + grid.taps[:, 0] + v[..., 1]
    xs = np.arange(w, dtype=v.dtype)[None, :, None] + grid.taps[:, 1] + v[..., 0]
    ts = grid.taps[:, 2] + (v[..., 2] if grid.components == 3 else 0.0)
    return ys, xs, np.broadcast_to(ts, ys.shape)


def sampling_coordinates(h: int, w: int, grid: RigidGrid, offsets) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Absolute (y, x, t) sampling positions, each ``[H, W, N]``."""
    v = np.asarray(getattr(offsets, "data", offsets))
    return _sample_coords(h, w, grid, v)


def deform_sample(x, offsets, grid: RigidGrid) -> Tensor:
    """Sample ``x`` ([H,W] or [H,W,T]) at the deformed taps; returns ``S[H,W,N]``."""
    x, v = as_tensor(x), as_tensor(offsets)
    if x.data.ndim not in (2, 3):
        raise ShapeError(f"input must be [H,W] or [H,W,T], got {x.shape}")
    h, w = x.shape[:2]
    expected = (h, w, grid.n, grid.components)
    if v.shape != expected:
        raise ShapeError(f"offsets shape {v.shape} != {expected}")
    ys, xs, ts = _sample_coords(h, w, grid, v.data)
    samples = sample_trilinear_many(x.data, ys, xs, ts)

    def _backward(g):
        gvol, gy, gx, gt = sample_trilinear_many_backward(x.data, ys, xs, ts, g)
        gx_in = gvol.reshape(x.shape) if x.requires_grad else None
        gv = None
        if v.requires_grad:
            parts = [gx, gy] + ([gt] if grid.components == 3 else [])
            gv = np.stack(parts, axis=-1)
        return gx_in, gv

    return make_result("deform_sample", samples, (x, v), _backward)


def tap_sum(samples, weights, start: int = 0, stop: Optional[int] = None, factor: float = 1.0) -> Tensor:
    """``factor * sum_{n in [start, stop)} S[..., n] * F[..., n]``."""
    s, f = as_tensor(samples), as_tensor(weights)
    if s.shape != f.shape:
        raise ShapeError(f"samples {s.shape} and weights {f.shape} must agree")
    stop = s.shape[-1] if stop is None else stop
    block = slice(start, stop)
    out = factor * np.sum(s.data[..., block] * f.data[..., block], axis=-1)

    def _backward(g):
        gs = gf = None
        if s.requires_grad:
            gs = np.zeros_like(s.data)
            gs[..., block] = factor * g[..., None] * f.data[..., block]
        if f.requires_grad:
            gf = np.zeros_like(f.data)
            gf[..., block] = factor * g[..., None] * s.data[..., block]
        return gs, gf

    return make_result("tap_sum", out, (s, f), _backward)


def _check_weights(h: int, w: int, grid: RigidGrid, weights: Tensor) -> None:
    if weights.shape != (h, w, grid.n):
        raise ShapeError(f"weights shape {weights.shape} != {(h, w, grid.n)}")


def filter2d_deformable(x, grid: RigidGrid, offsets, weights) -> Tensor:
    x, f = as_tensor(x), as_tensor(weights)
    if x.data.ndim != 2:
        raise ShapeError(f"filter2d_deformable expects an [H,W] image, got {x.shape}")
    if grid.components != 2:
        raise ShapeError("filter2d_deformable needs a 2D grid")
    _check_weights(*x.shape, grid, f)
    return tap_sum(deform_sample(x, offsets, grid), f)


FrameStack = Union[Tensor, np.ndarray, Sequence]


def _stack_frames(items: FrameStack, tail: Tuple[int, ...]) -> Tensor:
    """Turn per-frame tensors (or one tensor with a leading frame axis) into [H,W,T*N(,C)]."""
    if isinstance(items, (list, tuple)):
        stacked = ops.concat([ops.reshape(as_tensor(t), (1,) + as_tensor(t).shape) for t in items], axis=0)
    else:
        stacked = as_tensor(items)
    nf = stacked.shape[0]
    h, w, n = stacked.shape[1:4]
    if stacked.shape[4:] != tail:
        raise ShapeError(f"per-frame tensor trailing shape {stacked.shape[4:]} != {tail}")
    axes = (1, 2, 0) + tuple(range(3, stacked.data.ndim))
    moved = ops.transpose(stacked, axes)
    return ops.reshape(moved, (h, w, nf * n) + tail)


def filter2d_per_frame(x_seq, grid: RigidGrid, offsets_per_frame: FrameStack, weights_per_frame: FrameStack) -> Tensor:
    """Apply an independent 2D deformable kernel to every frame and sum the results."""
    x = as_tensor(x_seq)
    if x.data.ndim != 3:
        raise ShapeError(f"filter2d_per_frame expects [H,W,T], got {x.shape}")
    frames = x.shape[2]
    n_off = len(offsets_per_frame) if isinstance(offsets_per_frame, (list, tuple)) else as_tensor(offsets_per_frame).shape[0]
    n_w = len(weights_per_frame) if isinstance(weights_per_frame, (list, tuple)) else as_tensor(weights_per_frame).shape[0]
    if n_off != frames or n_w != frames:
        raise ShapeError(f"need one offset/weight pair per frame: frames={frames} offsets={n_off} weights={n_w}")
    full = per_frame_grid(grid, (frames - 1) // 2)
    v = _stack_frames(offsets_per_frame, (2,))
    f = _stack_frames(weights_per_frame, ())
    _check_weights(x.shape[0], x.shape[1], full, f)
    return tap_sum(deform_sample(x, v, full), f)


def filter3d_deformable(x, grid: RigidGrid, offsets, weights) -> Tensor:
    x, f = as_tensor(x), as_tensor(weights)
    if x.data.ndim != 3:
        raise ShapeError(f"filter3d_deformable expects [H,W,T], got {x.shape}")
    if not grid.is_3d:
        raise ShapeError("filter3d_deformable needs a 3D grid")
    _check_weights(x.shape[0], x.shape[1], grid, f)
    return tap_sum(deform_sample(x, offsets, grid), f)


def group_bounds(n: int, s: int, group_index: int) -> Tuple[int, int]:
    if s < 1 or n % s:
        raise ValueError(f"tap count {n} is not divisible into {s} groups")
    if not 1 <= group_index <= s:
        raise ValueError(f"group index must be in 1..{s}, got {group_index}")
    size = n // s
    return (group_index - 1) * size, group_index * size


def group_outputs(samples, weights, s: int) -> List[Tensor]:
    """All ``s`` group results from precomputed samples."""
    n = as_tensor(samples).shape[-1]
    return [tap_sum(samples, weights, *group_bounds(n, s, i), factor=float(s)) for i in range(1, s + 1)]


def filter_group(x, grid: RigidGrid, offsets, weights, group_index: int, s: int) -> Tensor:
    """``s * sum_{j in N_i} X(tap j) F(j)`` for the i-th contiguous block of taps (1-based)."""
    lo, hi = group_bounds(grid.n, s, group_index)
    f = as_tensor(weights)
    x = as_tensor(x)
    _check_weights(x.shape[0], x.shape[1], grid, f)
    return tap_sum(deform_sample(x, offsets, grid), f, lo, hi, factor=float(s))
