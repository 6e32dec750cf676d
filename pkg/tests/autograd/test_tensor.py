import threading

import numpy as np
import pytest

from src.autograd import ops
from src.autograd.tensor import ParamStore, Tape, Tensor, active_tape, backward
from src.errors import NonFiniteError, ShapeError, TapeError


def test_backward_accumulates_into_leaves():
    """d/da sum(a*b) == b and d/db == a"""
    a = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    b = Tensor(np.array([4.0, 5.0, 6.0]), requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(a, b))
        backward(tape, loss)
    assert np.array_equal(a.grad, b.data)
    assert np.array_equal(b.grad, a.data)
    assert loss.item() == 32.0


def test_shared_input_gradients_add_up():
    x = Tensor(np.array([2.0]), requires_grad=True)
    with Tape() as tape:
        y = ops.add(ops.mul(x, x), x)  # x^2 + x
        backward(tape, ops.sum_all(y))
    assert x.grad[0] == pytest.approx(5.0)


def test_backward_rejects_foreign_tensor():
    x = Tensor(np.array([1.0]), requires_grad=True)
    with Tape() as other:
        y = ops.sum_all(ops.scale(x, 2.0))
    with Tape() as tape:
        with pytest.raises(TapeError):
            backward(tape, y)
    assert len(other) == 2


def test_backward_needs_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ops.scale(x, 2.0)
        with pytest.raises(ShapeError):
            backward(tape, y)


def test_nothing_recorded_without_tape_or_grad():
    x = Tensor(np.ones(3))
    with Tape() as tape:
        ops.scale(x, 2.0)
    assert len(tape) == 0
    y = ops.scale(Tensor(np.ones(2), requires_grad=True), 3.0)
    assert not y.requires_grad


def test_non_finite_values_raise():
    with pytest.raises(NonFiniteError):
        ops.scale(Tensor(np.array([1.0])), float("inf"))


def test_tape_is_thread_local():
    seen = []
    with Tape():
        t = threading.Thread(target=lambda: seen.append(active_tape()))
        t.start()
        t.join()
        assert active_tape() is not None
    assert seen == [None]
    assert active_tape() is None


def test_param_store_load_checks_names_and_shapes():
    store = ParamStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(KeyError):
        store.add("w", np.zeros(1))
    with pytest.raises(KeyError):
        store.load({"v": np.zeros((2, 2))})
    with pytest.raises(ShapeError):
        store.load({"w": np.zeros(3)})
    store.load({"w": np.ones((2, 2))})
    assert store.snapshot()["w"].sum() == 4.0
    assert store.gradient("w") is None
    store.zero_grad()
    assert np.array_equal(store.gradient("w"), np.zeros((2, 2)))


def test_param_store_astype_for_inference():
    store = ParamStore()
    store.add("b", np.arange(3.0))
    lite = store.astype(np.float32)
    assert lite["b"].data.dtype == np.float32
    assert not lite["b"].requires_grad
    assert store["b"].data.dtype == np.float64
