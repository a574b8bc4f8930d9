"""Dense tensors with reverse-mode automatic differentiation.

A ``ComputationTape`` is activated with a ``with`` block and is local to the
thread that entered it. While a tape is active, every primitive whose inputs
require gradients appends its output node to the tape, so the tape is in
topological order by construction. Outside a tape the primitives only compute
values (evaluation mode).
"""

import threading
from contextlib import contextmanager
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np


_state = threading.local()


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonDeterministicError(RuntimeError):
    """Raised when a stochastic primitive runs inside a deterministic section."""


class Tensor:
    """A dense array plus the bookkeeping needed for backpropagation."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_inputs", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        array = np.asarray(data, dtype=dtype if dtype is not None else None)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._inputs: Sequence["Tensor"] = ()
        self._backward = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item: expected a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} dtype={self.dtype}>"

    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


TensorLike = Union[Tensor, np.ndarray, float, int, Sequence[float]]


class ComputationTape:
    """Ordered record of primitive operations for one backward pass."""

    def __init__(self):
        self.nodes: List[Tensor] = []

    def record(self, node: Tensor):
        self.nodes.append(node)

    def __len__(self) -> int:
        return len(self.nodes)

    def __enter__(self) -> "ComputationTape":
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _tape_stack().pop()
        return False


def _tape_stack() -> list:
    if not hasattr(_state, "tapes"):
        _state.tapes = []
    return _state.tapes


def current_tape() -> Optional[ComputationTape]:
    """Return the innermost active tape of the calling thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def no_grad():
    """Suspend recording for the calling thread."""
    previous = getattr(_state, "tapes", [])
    _state.tapes = []
    try:
        yield
    finally:
        _state.tapes = previous


@contextmanager
def deterministic():
    """Forbid stochastic primitives (dropout) for the calling thread."""
    previous = getattr(_state, "deterministic", False)
    _state.deterministic = True
    try:
        yield
    finally:
        _state.deterministic = previous


def is_deterministic() -> bool:
    return getattr(_state, "deterministic", False)


def _as_tensor(value: TensorLike, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or np.float64))


def constant(value, dtype=np.float64) -> Tensor:
    """Wrap a value as a tensor that never receives gradients."""
    return Tensor(np.array(value, dtype=dtype))


def zeros(shape, dtype=np.float64) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype))


def _node(data: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    tape = current_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return Tensor(data)
    out = Tensor(data, requires_grad=True)
    out._inputs = tuple(inputs)
    out._backward = backward
    tape.record(out)
    return out


def _accumulate(target: Tensor, grad: np.ndarray):
    if target.grad is None:
        target.grad = np.array(grad, dtype=target.data.dtype, copy=True)
    else:
        target.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(op: str, a: Tensor, b: Tensor):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; 1-D operands act as row (left) or column (right) vectors."""
    if a.ndim == 0 or b.ndim == 0 or a.ndim > 2 or b.ndim > 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = a.data @ b.data
    a2 = a.data if a.ndim == 2 else a.data[None, :]
    b2 = b.data if b.ndim == 2 else b.data[:, None]

    def backward(grad):
        g2 = grad.reshape(a2.shape[0], b2.shape[1])
        ga = (g2 @ b2.T).reshape(a.shape) if a.requires_grad else None
        gb = (a2.T @ g2).reshape(b.shape) if b.requires_grad else None
        return ga, gb

    return _node(out, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("add", a, b)

    def backward(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _node(a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("sub", a, b)

    def backward(grad):
        return _unbroadcast(grad, a.shape), -_unbroadcast(grad, b.shape)

    return _node(a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product with broadcasting."""
    _check_broadcast("mul", a, b)

    def backward(grad):
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return _node(a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    def backward(grad):
        return (grad * factor,)

    return _node(a.data * factor, (a,), backward)


def one_minus(a: Tensor) -> Tensor:
    def backward(grad):
        return (-grad,)

    return _node(1.0 - a.data, (a,), backward)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {a.shape}")

    def backward(grad):
        return (grad.T,)

    return _node(a.data.T, (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: no operands")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = " and ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"concat: incompatible shapes {shapes}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return _node(out, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    if not tensors:
        raise ShapeError("stack: no operands")
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise ShapeError(f"stack: incompatible shapes {first} and {t.shape}")
    out = np.stack([t.data for t in tensors])

    def backward(grad):
        return tuple(grad[i] for i in range(len(tensors)))

    return _node(out, tuple(tensors), backward)


def take(a: Tensor, index: int) -> Tensor:
    """Select one entry along the leading axis."""
    if not -a.shape[0] <= index < a.shape[0]:
        raise ShapeError(f"take: index {index} out of range for shape {a.shape}")

    def backward(grad):
        full = np.zeros_like(a.data)
        full[index] = grad
        return (full,)

    return _node(a.data[index], (a,), backward)


def sum_all(a: Tensor) -> Tensor:
    def backward(grad):
        return (np.broadcast_to(grad, a.shape).copy(),)

    return _node(np.array(a.data.sum(), dtype=a.dtype), (a,), backward)


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    """Sum of equally shaped tensors as a single node."""
    if not tensors:
        raise ShapeError("add_n: no operands")
    out = tensors[0].data.copy()
    for t in tensors[1:]:
        if t.shape != tensors[0].shape:
            raise ShapeError(f"add_n: incompatible shapes {tensors[0].shape} and {t.shape}")
        out = out + t.data

    def backward(grad):
        return tuple(grad for _ in tensors)

    return _node(out, tuple(tensors), backward)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a: Tensor) -> Tensor:
    out = _stable_sigmoid(a.data)

    def backward(grad):
        return (grad * out * (1.0 - out),)

    return _node(out, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward(grad):
        return (grad * (1.0 - out * out),)

    return _node(out, (a,), backward)


def _check_nonempty(op: str, a: Tensor):
    if a.ndim == 0 or a.shape[-1] == 0:
        raise ShapeError(f"{op}: empty input of shape {a.shape}")


def _softmax_array(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax_array(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis."""
    _check_nonempty("softmax", a)
    out = _softmax_array(a.data)

    def backward(grad):
        dot = (grad * out).sum(axis=-1, keepdims=True)
        return (out * (grad - dot),)

    return _node(out, (a,), backward)


def log_softmax(a: Tensor) -> Tensor:
    _check_nonempty("log_softmax", a)
    out = _log_softmax_array(a.data)

    def backward(grad):
        probs = np.exp(out)
        return (grad - probs * grad.sum(axis=-1, keepdims=True),)

    return _node(out, (a,), backward)


def _targets_for(op: str, a: Tensor, targets) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    rows = 1 if a.ndim == 1 else a.shape[0]
    if idx.shape[0] != rows:
        raise ShapeError(f"{op}: {idx.shape[0]} targets for input of shape {a.shape}")
    classes = a.shape[-1]
    if np.any(idx < 0) or np.any(idx >= classes):
        raise ValueError(f"{op}: target index out of range [0, {classes})")
    return idx


def nll(log_probs: Tensor, targets) -> Tensor:
    """Negative log-likelihood summed over rows of log-probabilities."""
    _check_nonempty("nll", log_probs)
    idx = _targets_for("nll", log_probs, targets)
    lp = log_probs.data if log_probs.ndim == 2 else log_probs.data[None, :]
    rows = np.arange(idx.shape[0])
    out = np.array(-lp[rows, idx].sum(), dtype=log_probs.dtype)

    def backward(grad):
        full = np.zeros_like(lp)
        full[rows, idx] = -grad
        return (full.reshape(log_probs.shape),)

    return _node(out, (log_probs,), backward)


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Fused log-softmax and negative log-likelihood, summed over rows."""
    _check_nonempty("cross_entropy", logits)
    idx = _targets_for("cross_entropy", logits, targets)
    x = logits.data if logits.ndim == 2 else logits.data[None, :]
    logp = _log_softmax_array(x)
    rows = np.arange(idx.shape[0])
    out = np.array(-logp[rows, idx].sum(), dtype=logits.dtype)

    def backward(grad):
        g = np.exp(logp)
        g[rows, idx] -= 1.0
        return ((g * grad).reshape(logits.shape),)

    return _node(out, (logits,), backward)


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Row lookup ``table[ids]``; gradients scatter-add back into the table."""
    idx = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding: table must be a matrix, got shape {table.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding: id out of range for table of shape {table.shape}")

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, grad)
        return (full,)

    return _node(table.data[idx], (table,), backward)


def dropout(a: Tensor, keep_prob: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout: surviving entries are scaled by ``1 / keep_prob``."""
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"dropout: keep probability must be in (0, 1], got {keep_prob}")
    if keep_prob == 1.0:
        return a
    if is_deterministic():
        raise NonDeterministicError("dropout is enabled inside a deterministic section")
    if rng is None:
        raise ValueError("dropout: an RNG is required when keep probability < 1")
    mask = (rng.random(a.shape) < keep_prob).astype(a.dtype) / keep_prob

    def backward(grad):
        return (grad * mask,)

    return _node(a.data * mask, (a,), backward)


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

def backward(tape: ComputationTape, loss: Tensor, params: Optional[Iterable] = None) -> Dict[str, np.ndarray]:
    """Propagate d(loss)/d(node) backwards over ``tape``.

    Args:
        tape: Tape the loss was recorded on
        loss: Scalar node
        params: Optional ``ParameterStore`` (or iterable of named tensors);
            when given, the returned map holds one gradient per parameter,
            zeros for parameters the loss does not reach

    Returns:
        Mapping of parameter name to gradient array
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be a scalar, got shape {loss.shape}")

    if loss.requires_grad:
        _accumulate(loss, np.ones_like(loss.data))
        for node in reversed(tape.nodes):
            if node.grad is None or node._backward is None:
                continue
            grads = node._backward(node.grad)
            for source, grad in zip(node._inputs, grads):
                if grad is not None and source.requires_grad:
                    _accumulate(source, grad)

    if params is None:
        return {}
    result = {}
    for name, tensor in _named(params):
        if tensor.grad is None:
            tensor.grad = np.zeros_like(tensor.data)
        result[name] = tensor.grad
    return result


def _named(params):
    if hasattr(params, "items"):
        return params.items()
    return ((t.name, t) for t in params)


def softmax_array(x) -> np.ndarray:
    """Numerically stable softmax of a plain array (no tape)."""
    return _softmax_array(np.asarray(x, dtype=np.float64))
