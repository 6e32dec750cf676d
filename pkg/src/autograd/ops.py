"""Differentiable operations used by the offset network and the losses.

Only what this project needs: 3×3 (odd-sized) zero-padded convolution,
ReLU / tanh, 2× average-pool / nearest-upsample, and a handful of elementwise
and shape helpers. Each op computes its forward with numpy and returns a
closure giving the exact gradient for every input.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor, as_tensor, make_result


def _need(t: Tensor, g):
    return g if t.requires_grad else None


def _im2col(xp: np.ndarray, kh: int, kw: int, h: int, w: int) -> np.ndarray:
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # [C, H, W, kh, kw]
    return win.transpose(0, 3, 4, 1, 2).reshape(xp.shape[0] * kh * kw, h * w)


def conv2d(x, weights, bias) -> Tensor:
    """Zero-padded stride-1 cross-correlation: [C_in,H,W] -> [C_out,H,W]."""
    x, w, b = as_tensor(x), as_tensor(weights), as_tensor(bias)
    if x.data.ndim != 3:
        raise ShapeError(f"conv2d expects [C,H,W] input, got {x.shape}")
    cout, cin, kh, kw = w.shape
    if cin != x.shape[0]:
        raise ShapeError(f"conv2d: weights expect {cin} input channels, input has {x.shape[0]}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d: kernel extents must be odd, got {kh}x{kw}")
    if b.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {b.shape} != ({cout},)")
    _, h, wd = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data, ((0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(xp, kh, kw, h, wd)
    wmat = w.data.reshape(cout, -1)
    out = (wmat @ cols).reshape(cout, h, wd) + b.data[:, None, None]

    def _backward(g):
        g2 = g.reshape(cout, -1)
        gw = (g2 @ cols.T).reshape(w.shape) if w.requires_grad else None
        gb = g2.sum(axis=1) if b.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = (wmat.T @ g2).reshape(cin, kh, kw, h, wd)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i:i + h, j:j + wd] += dcols[:, i, j]
            gx = dxp[:, ph:ph + h, pw:pw + wd]
        return gx, gw, gb

    return make_result("conv2d", out, (x, w, b), _backward)


def activation(x, kind: str) -> Tensor:
    x = as_tensor(x)
    if kind == "relu":
        mask = x.data > 0  # subgradient at exactly 0 is 0
        return make_result("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))
    if kind == "tanh":
        y = np.tanh(x.data)
        return make_result("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))
    raise ValueError(f"unknown activation {kind!r}")


def relu(x) -> Tensor:
    return activation(x, "relu")


def tanh(x) -> Tensor:
    return activation(x, "tanh")


def resample2x(x, direction: str) -> Tensor:
    """2×2 average pooling ("down") or nearest-neighbour 2× upsampling ("up") on [C,H,W]."""
    x = as_tensor(x)
    if x.data.ndim != 3:
        raise ShapeError(f"resample2x expects [C,H,W], got {x.shape}")
    c, h, w = x.shape
    if direction == "down":
        if h % 2 or w % 2:
            raise ShapeError(f"resample2x(down) needs even extents, got {h}x{w}")
        out = x.data.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))

        def _backward(g):
            return (np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) * 0.25,)

        return make_result("avgpool2x", out, (x,), _backward)
    if direction == "up":
        out = np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2)

        def _backward(g):
            return (g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)),)

        return make_result("upsample2x", out, (x,), _backward)
    raise ValueError(f"unknown resample direction {direction!r}")


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("add", a, b)
    return make_result("add", a.data + b.data, (a, b), lambda g: (_need(a, g), _need(b, g)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("sub", a, b)
    return make_result("sub", a.data - b.data, (a, b), lambda g: (_need(a, g), -g if b.requires_grad else None))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    return make_result(
        "mul", a.data * b.data, (a, b),
        lambda g: (g * b.data if a.requires_grad else None, g * a.data if b.requires_grad else None),
    )


def scale(x, factor: float) -> Tensor:
    x = as_tensor(x)
    return make_result("scale", x.data * factor, (x,), lambda g: (g * factor,))


def mul_const(x, const: np.ndarray) -> Tensor:
    """Multiply by a constant array that broadcasts to ``x``'s shape."""
    x = as_tensor(x)
    const = np.asarray(const, dtype=x.data.dtype)
    out = x.data * const
    if out.shape != x.shape:
        raise ShapeError(f"mul_const: constant {const.shape} must broadcast to {x.shape}")
    return make_result("mul_const", out, (x,), lambda g: (g * const,))


def absolute(x) -> Tensor:
    x = as_tensor(x)
    return make_result("abs", np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),))


def sum_all(x) -> Tensor:
    x = as_tensor(x)
    return make_result("sum", np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))


def mean_all(x) -> Tensor:
    x = as_tensor(x)
    n = x.size

    def _backward(g):
        return (np.full(x.shape, float(g) / n, dtype=x.data.dtype),)

    return make_result("mean", np.asarray(x.data.mean()), (x,), _backward)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    out = np.concatenate([t.data for t in ts], axis=axis)
    bounds = np.cumsum([0] + [t.shape[axis] for t in ts])

    def _backward(g):
        parts = []
        for t, lo, hi in zip(ts, bounds[:-1], bounds[1:]):
            if not t.requires_grad:
                parts.append(None)
                continue
            index = [slice(None)] * g.ndim
            index[axis] = slice(int(lo), int(hi))
            parts.append(g[tuple(index)])
        return tuple(parts)

    return make_result("concat", out, ts, _backward)


def reshape(x, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    return make_result("reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x, axes: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    inverse = tuple(np.argsort(axes))
    return make_result("transpose", np.ascontiguousarray(x.data.transpose(axes)), (x,), lambda g: (g.transpose(inverse),))
