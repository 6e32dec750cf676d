import numpy as np
import pytest

from src.autograd import ops
from src.autograd.tensor import Tape, Tensor, backward
from src.errors import ShapeError
from src.gradcheck import check_activations, check_conv2d, check_resample, fd_check


def _conv_reference(x, w, b):
    cout, cin, kh, kw = w.shape
    _, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    out = np.zeros((cout, h, wd))
    for o in range(cout):
        for i in range(h):
            for j in range(wd):
                out[o, i, j] = np.sum(xp[:, i:i + kh, j:j + kw] * w[o]) + b[o]
    return out


def test_conv2d_matches_direct_loop():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 5, 6))
    w = rng.standard_normal((3, 2, 3, 3))
    b = rng.standard_normal(3)
    out = ops.conv2d(x, w, b)
    assert np.allclose(out.data, _conv_reference(x, w, b), atol=1e-12)


def test_conv2d_shape_errors():
    x = np.zeros((2, 4, 4))
    with pytest.raises(ShapeError):
        ops.conv2d(x, np.zeros((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeError):
        ops.conv2d(x, np.zeros((1, 2, 2, 2)), np.zeros(1))
    with pytest.raises(ShapeError):
        ops.conv2d(x, np.zeros((1, 2, 3, 3)), np.zeros(2))


@pytest.mark.parametrize("check", [check_conv2d, check_activations, check_resample])
def test_op_gradients_match_finite_differences(check):
    rng = np.random.default_rng(1)
    for _ in range(3):
        assert check(rng) < 1e-4


def test_resample_values():
    x = np.arange(16.0).reshape(1, 4, 4)
    down = ops.resample2x(x, "down").data
    assert down[0, 0, 0] == pytest.approx((0 + 1 + 4 + 5) / 4)
    up = ops.resample2x(down, "up").data
    assert up.shape == (1, 4, 4)
    assert up[0, 1, 1] == down[0, 0, 0]
    with pytest.raises(ShapeError):
        ops.resample2x(np.zeros((1, 3, 4)), "down")


def test_relu_subgradient_at_zero_is_zero():
    x = Tensor(np.array([-1.0, 0.0, 2.0]), requires_grad=True)
    with Tape() as tape:
        backward(tape, ops.sum_all(ops.relu(x)))
    assert np.array_equal(x.grad, [0.0, 0.0, 1.0])


def test_shape_ops_route_gradients():
    rng = np.random.default_rng(2)
    arrays = {"a": rng.standard_normal((2, 3)), "b": rng.standard_normal((4, 3))}
    proj = rng.standard_normal((3, 6))

    def build(t):
        cat = ops.concat([t["a"], t["b"]], axis=0)  # [6,3]
        moved = ops.transpose(cat, (1, 0))  # [3,6]
        flat = ops.reshape(moved, (18,))
        return ops.sum_all(ops.mul_const(ops.reshape(flat, (3, 6)), proj))

    assert fd_check(build, arrays, rng) < 1e-6


def test_elementwise_gradients():
    rng = np.random.default_rng(3)
    arrays = {"a": rng.uniform(0.5, 0.9, (3, 3)), "b": rng.uniform(0.5, 1.5, (3, 3))}

    def build(t):
        d = ops.sub(ops.add(t["a"], t["b"]), ops.mul(t["a"], t["b"]))
        return ops.mean_all(ops.absolute(ops.scale(d, 0.5)))

    assert fd_check(build, arrays, rng) < 1e-6


def test_conv2d_small_cases():
    x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
    assert np.array_equal(ops.conv2d(x, np.ones((1, 1, 3, 3)), np.zeros(1)).data, [[[10.0, 10.0], [10.0, 10.0]]])
    centre = np.zeros((1, 1, 3, 3))
    centre[0, 0, 1, 1] = 1.0
    assert np.array_equal(ops.conv2d(x, centre, np.zeros(1)).data, x)
    assert np.array_equal(ops.conv2d(x, np.zeros((2, 1, 3, 3)), np.array([0.5, -1.0])).data[:, 0, 0], [0.5, -1.0])


def test_downsample_undoes_upsample():
    x = np.random.default_rng(5).standard_normal((3, 4, 5))
    assert np.array_equal(ops.resample2x(ops.resample2x(x, "up"), "down").data, x)
