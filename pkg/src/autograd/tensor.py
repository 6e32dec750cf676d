"""Dense tensors with a reverse-mode tape.

A ``Tensor`` wraps a numpy array. Operations in ``src.autograd.ops`` (and the
samplers in ``src.sampling``) record themselves on the tape that is active in
the current thread when at least one input requires a gradient. ``backward``
replays that record in exact reverse order and accumulates gradients into the
leaves, which for training are the entries of a ``ParamStore``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NonFiniteError, ShapeError, TapeError
from ..settings import TRAIN_DTYPE

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_local = threading.local()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype.kind == "f" else TRAIN_DTYPE
        self.data = np.asarray(data, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._tape: Optional[Tape] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def accumulate(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match value shape {self.data.shape}")
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class _Record:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Ordered log of differentiable operations.

    Use as a context manager; the tape is active for the current thread only,
    so independent tapes can run on separate threads.
    """

    def __init__(self):
        self.records: List[_Record] = []

    def __enter__(self) -> "Tape":
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _local.stack.pop()
        return False

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: str, inputs: Tuple[Tensor, ...], output: Tensor, backward: BackwardFn) -> None:
        output._tape = self
        output.requires_grad = True
        self.records.append(_Record(op, inputs, output, backward))


def active_tape() -> Optional[Tape]:
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


def check_finite(arr: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{op} produced non-finite values")
    return arr


def make_result(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    """Wrap an op's output and register it on the active tape when needed."""
    out = Tensor(check_finite(data, op))
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape.record(op, inputs, out, backward)
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every leaf that requires a gradient."""
    if loss._tape is not tape:
        raise TapeError("backward() called on a tensor that was not produced under this tape")
    if loss.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g_out = grads.pop(id(rec.output), None)
        if g_out is None:
            continue
        for inp, g in zip(rec.inputs, rec.backward(g_out)):
            if g is None or not inp.requires_grad:
                continue
            if inp._tape is tape:
                prev = grads.get(id(inp))
                grads[id(inp)] = g if prev is None else prev + g
            else:
                # leaf (parameter or input marked requires_grad)
                inp.accumulate(g)


class ParamStore:
    """Named parameters, each a leaf ``Tensor`` whose ``grad`` has the value's shape."""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=TRAIN_DTYPE), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> List[str]:
        return list(self._params)

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = np.zeros_like(t.data)

    def gradient(self, name: str) -> Optional[np.ndarray]:
        return self._params[name].grad

    def num_values(self) -> int:
        return sum(t.size for t in self._params.values())

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load(self, values: Dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(values)
        extra = set(values) - set(self._params)
        if missing or extra:
            raise KeyError(f"parameter sets differ: missing={sorted(missing)} unexpected={sorted(extra)}")
        for k, v in values.items():
            if v.shape != self._params[k].shape:
                raise ShapeError(f"parameter {k!r}: shape {v.shape} != {self._params[k].shape}")
            self._params[k].data = np.array(v, dtype=TRAIN_DTYPE)
            self._params[k].grad = None

    def astype(self, dtype) -> "ParamStore":
        """Copy used for reduced-precision inference; gradients are not carried."""
        out = ParamStore()
        for k, t in self._params.items():
            c = Tensor(t.data.astype(dtype), requires_grad=False, name=k)
            out._params[k] = c
        return out
