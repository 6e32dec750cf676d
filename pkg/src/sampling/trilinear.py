"""Trilinear (and, as the single-frame case, bilinear) sampling.

A volume is indexed ``volume[i, j, k]`` with ``i`` the row, ``j`` the column
and ``k = t + tau`` the frame, where ``t`` is the frame offset from the
reference frame (``t = 0``) and ``T = 2*tau + 1``. The interpolant is

    sum_{i,j,t} X(i,j,t) * max(0, 1-|y-i|) * max(0, 1-|x-j|) * max(0, 1-|t_p-t|)

so points outside the grid read zeros. Only the two lattice neighbours per
axis (floor and floor+1) can have a nonzero weight, which gives at most eight
contributing corners.

Coordinate derivatives use the piecewise sign convention: the factor is 0
when ``|d| >= 1``, +1 when ``-1 < d < 0`` and -1 otherwise, with ``d`` the
signed distance from the sample to the lattice point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ShapeError

_CORNERS = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]


@dataclass(frozen=True)
class SamplePoint3:
    y: float
    x: float
    t: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.y, self.x, self.t)):
            raise ValueError(f"sample point must be finite, got {self}")


def _volume(volume) -> np.ndarray:
    arr = np.asarray(getattr(volume, "data", volume))
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"expected [H,W] or [H,W,T] volume, got shape {arr.shape}")
    if arr.shape[2] % 2 == 0:
        raise ShapeError(f"frame count must be 2*tau+1, got {arr.shape[2]}")
    return arr


def _axis(coord: np.ndarray):
    base = np.floor(coord)
    frac = coord - base
    base = base.astype(np.int64)
    weights = (1.0 - frac, frac)
    # floor corner always has d in [0, 1) -> -1; the upper corner has d in [-1, 0),
    # which is +1 except at d == -1 exactly (integer coordinate) where it is 0.
    slopes = (np.full_like(frac, -1.0), np.where(frac > 0.0, 1.0, 0.0))
    return base, weights, slopes


def _gather(vol: np.ndarray, ii, jj, kk):
    h, w, t = vol.shape
    valid = (ii >= 0) & (ii < h) & (jj >= 0) & (jj < w) & (kk >= 0) & (kk < t)
    vals = np.where(valid, vol[np.clip(ii, 0, h - 1), np.clip(jj, 0, w - 1), np.clip(kk, 0, t - 1)], 0.0)
    return vals, valid


def sample_trilinear_many(volume, ys, xs, ts) -> np.ndarray:
    """Vectorized sampler; ``ys``/``xs``/``ts`` broadcast to a common shape."""
    vol = _volume(volume)
    tau = (vol.shape[2] - 1) // 2
    ys, xs, ts = np.broadcast_arrays(np.asarray(ys, dtype=vol.dtype), np.asarray(xs, dtype=vol.dtype), np.asarray(ts, dtype=vol.dtype))
    by, wy, _ = _axis(ys)
    bx, wx, _ = _axis(xs)
    bt, wt, _ = _axis(ts + tau)
    out = np.zeros(ys.shape, dtype=vol.dtype)
    for a, b, c in _CORNERS:
        vals, _ = _gather(vol, by + a, bx + b, bt + c)
        out += vals * (wy[a] * wx[b] * wt[c])
    return out


def sample_trilinear_many_backward(volume, ys, xs, ts, upstream) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (grad_volume, grad_y, grad_x, grad_t) for the vectorized sampler."""
    vol = _volume(volume)
    tau = (vol.shape[2] - 1) // 2
    ys, xs, ts, up = np.broadcast_arrays(
        np.asarray(ys, dtype=vol.dtype), np.asarray(xs, dtype=vol.dtype),
        np.asarray(ts, dtype=vol.dtype), np.asarray(upstream, dtype=vol.dtype),
    )
    by, wy, sy = _axis(ys)
    bx, wx, sx = _axis(xs)
    bt, wt, st = _axis(ts + tau)
    h, w, t = vol.shape
    gy = np.zeros(ys.shape, dtype=vol.dtype)
    gx = np.zeros_like(gy)
    gt = np.zeros_like(gy)
    grad_vol = np.zeros(h * w * t, dtype=vol.dtype)
    for a, b, c in _CORNERS:
        ii, jj, kk = by + a, bx + b, bt + c
        vals, valid = _gather(vol, ii, jj, kk)
        gy += vals * (sy[a] * wx[b] * wt[c])
        gx += vals * (wy[a] * sx[b] * wt[c])
        gt += vals * (wy[a] * wx[b] * st[c])
        weight = (wy[a] * wx[b] * wt[c]) * up
        flat = ((ii * w + jj) * t + kk)[valid]
        grad_vol += np.bincount(flat, weights=weight[valid], minlength=grad_vol.size)
    return grad_vol.reshape(h, w, t), gy * up, gx * up, gt * up


def sample_trilinear(volume, point: SamplePoint3) -> float:
    return float(sample_trilinear_many(volume, point.y, point.x, point.t))


def sample_trilinear_backward(volume, point: SamplePoint3, upstream: float):
    """Gradient of one sample.

    Returns ``(grad_volume_sparse, grad_y, grad_x, grad_t)`` where the sparse
    part lists ``((i, j, t), value)`` for every contributing lattice point,
    ``t`` being the frame offset from the reference.
    """
    vol = _volume(volume)
    tau = (vol.shape[2] - 1) // 2
    by, wy, _ = _axis(np.asarray(point.y, dtype=vol.dtype))
    bx, wx, _ = _axis(np.asarray(point.x, dtype=vol.dtype))
    bt, wt, _ = _axis(np.asarray(point.t + tau, dtype=vol.dtype))
    h, w, t = vol.shape
    sparse: List[Tuple[Tuple[int, int, int], float]] = []
    for a, b, c in _CORNERS:
        i, j, k = int(by) + a, int(bx) + b, int(bt) + c
        weight = float(wy[a] * wx[b] * wt[c])
        if weight == 0.0 or not (0 <= i < h and 0 <= j < w and 0 <= k < t):
            continue
        sparse.append(((i, j, k - tau), weight * upstream))
    _, gy, gx, gt = sample_trilinear_many_backward(vol, point.y, point.x, point.t, upstream)
    return sparse, float(gy), float(gx), float(gt)
