"""Dense tensors with reverse-mode automatic differentiation.

Every differentiable operation on tensors that require gradients appends a
node to the graph (an append-only tape) shared by its operands. ``backward``
replays that tape in reverse insertion order, so each node is visited once.
A fresh graph is started by the first operation that touches a leaf, which
means every forward pass builds its own tape. Two such tapes are merged when
an operation combines them.

Broadcasting is limited to scalar-tensor pairs and row-vector biases added
to matrices.
"""

import contextlib
import contextvars
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import ContractError, DimensionError, LabelIndexError

_grad_enabled = contextvars.ContextVar("grad_enabled", default=True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate operations without recording them on any graph"""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


@dataclass
class Node:
    """One recorded operation: its output, operands and vector-Jacobian rule"""
    output: "Tensor"
    inputs: Tuple["Tensor", ...]
    vjp: Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Graph:
    """Append-only tape of recorded operations"""

    def __init__(self):
        self.nodes: List[Node] = []

    def record(self, output: "Tensor", inputs: Tuple["Tensor", ...], vjp) -> None:
        output._graph = self
        output._node_index = len(self.nodes)
        self.nodes.append(Node(output=output, inputs=inputs, vjp=vjp))

    def absorb(self, other: "Graph") -> None:
        """Append the tape of an independent graph; both orders stay topological"""
        for node in other.nodes:
            node.output._graph = self
            node.output._node_index = len(self.nodes)
            self.nodes.append(node)
        other.nodes = []

    def backward(self, root: "Tensor") -> None:
        grads = {id(root): np.ones_like(root.data)}
        owners = {id(root): root}

        for node in reversed(self.nodes[: root._node_index + 1]):
            upstream = grads.get(id(node.output))
            if upstream is None:
                continue
            for operand, local in zip(node.inputs, node.vjp(upstream)):
                if local is None or not operand.requires_grad:
                    continue
                key = id(operand)
                if key in grads:
                    grads[key] = grads[key] + local
                else:
                    grads[key] = local
                    owners[key] = operand

        for key, grad in grads.items():
            owners[key]._accumulate(grad)


class Tensor:
    """Dense numeric array that can take part in a recorded computation"""

    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, data: Any, requires_grad: bool = False, dtype: Optional[np.dtype] = None):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data, dtype=dtype)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._graph: Optional[Graph] = None
        self._node_index: Optional[int] = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, data={self.data!r})"

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        array = self.data if dtype is None else self.data.astype(dtype)
        return array.copy() if copy else array

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=self.data.dtype).reshape(self.data.shape)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def backward(self) -> None:
        backward(self)

    # arithmetic

    def __add__(self, other: Any) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def relu(self) -> "Tensor":
        return relu(self)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return tensor_sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        return mean(self, axis)


def _lift(value: Any, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.data.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _shared_graph(inputs: Sequence[Tensor]) -> Graph:
    graphs = list({id(t._graph): t._graph for t in inputs if t._graph is not None}.values())
    if not graphs:
        return Graph()
    # operands built from separate leaves meet here for the first time
    target = graphs[0]
    for other in graphs[1:]:
        target.absorb(other)
    return target


def _result(data: np.ndarray, inputs: Tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor(data)
    if not _grad_enabled.get() or not any(t.requires_grad for t in inputs):
        return out
    out.requires_grad = True
    _shared_graph(inputs).record(out, inputs, vjp)
    return out


def _check_elementwise(a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    if a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return
    if b.ndim == 2 and a.ndim == 1 and a.shape[0] == b.shape[1]:
        return
    raise DimensionError(f"cannot combine shapes {a.shape} and {b.shape}")


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if shape == ():
        return np.asarray(grad.sum())
    return grad.sum(axis=0)


def _binary_operands(a: Any, b: Any) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _lift(b, a)
    b = _lift(b)
    return _lift(a, b), b


def add(a: Any, b: Any) -> Tensor:
    a, b = _binary_operands(a, b)
    _check_elementwise(a, b)

    def vjp(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _result(a.data + b.data, (a, b), vjp)


def sub(a: Any, b: Any) -> Tensor:
    a, b = _binary_operands(a, b)
    _check_elementwise(a, b)

    def vjp(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return _result(a.data - b.data, (a, b), vjp)


def mul(a: Any, b: Any) -> Tensor:
    a, b = _binary_operands(a, b)
    _check_elementwise(a, b)

    def vjp(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), vjp)


def div(a: Any, b: Any) -> Tensor:
    a, b = _binary_operands(a, b)
    _check_elementwise(a, b)

    def vjp(g):
        return (
            _reduce_to(g / b.data, a.shape),
            _reduce_to(-g * a.data / (b.data * b.data), b.shape),
        )

    return _result(a.data / b.data, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), lambda g: (-g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an m x k and a k x n tensor"""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects matrices, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _result(a.data @ b.data, (a, b), vjp)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got {a.shape}")
    return _result(a.data.T, (a,), lambda g: (g.T,))


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    return _result(out_data, (a,), lambda g: (g * out_data,))


def log(a: Tensor) -> Tensor:
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _result(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise ``a ** exponent`` for a real exponent"""
    if exponent == 0:
        return Tensor(np.ones_like(a.data))

    def vjp(g):
        base = a.data
        with np.errstate(divide="ignore", invalid="ignore"):
            local = exponent * np.power(base, exponent - 1)
        # zero base with exponent below 1: derivative taken as 0
        if exponent < 1:
            local = np.where(base == 0, 0.0, local)
        return (g * local,)

    return _result(np.power(a.data, exponent), (a,), vjp)


def tensor_sum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _result(a.data.sum(axis=axis), (a,), vjp)


def mean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    return tensor_sum(a, axis) * (1.0 / count)


def _lse_kernel(values: np.ndarray) -> np.ndarray:
    peak = np.max(values, axis=-1, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    return np.squeeze(peak, axis=-1) + np.log(np.sum(np.exp(values - peak), axis=-1))


def log_sum_exp(t: Tensor, axis: int = -1) -> Tensor:
    """Row-wise ``log(sum(exp(t)))`` over the last axis, stable for large entries"""
    if axis not in (-1, t.ndim - 1):
        raise DimensionError("log_sum_exp reduces over the last axis only")
    if t.ndim == 0 or t.shape[-1] == 0:
        raise DimensionError("log_sum_exp needs a non-empty last axis")
    out_data = _lse_kernel(t.data)

    def vjp(g):
        probs = np.exp(t.data - np.expand_dims(out_data, -1))
        return (np.expand_dims(g, -1) * probs,)

    return _result(out_data, (t,), vjp)


def softmax(t: Tensor) -> Tensor:
    """Row-wise softmax, computed as ``exp(t - log_sum_exp(t))``"""
    if t.ndim == 0 or t.shape[-1] == 0:
        raise DimensionError("softmax needs a non-empty last axis")
    out_data = np.exp(t.data - np.expand_dims(_lse_kernel(t.data), -1))

    def vjp(g):
        inner = np.sum(g * out_data, axis=-1, keepdims=True)
        return (out_data * (g - inner),)

    return _result(out_data, (t,), vjp)


def gather_labels(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Pick ``logits[i, labels[i]]`` for every row"""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise DimensionError(f"labels of shape {labels.shape} do not index logits {logits.shape}")
    num_classes = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelIndexError(f"labels must lie in [0, {num_classes})")
    rows = np.arange(labels.shape[0])

    def vjp(g):
        local = np.zeros_like(logits.data)
        np.add.at(local, (rows, labels), g)
        return (local,)

    return _result(logits.data[rows, labels], (logits,), vjp)


def backward(root: Tensor) -> None:
    """Populate ``grad`` of every tensor on the path to the scalar ``root``.

    Repeated calls without resetting gradients accumulate.
    """
    if root.ndim != 0:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if root._graph is None:
        if root.requires_grad:
            root._accumulate(np.ones_like(root.data))
        return
    root._graph.backward(root)
