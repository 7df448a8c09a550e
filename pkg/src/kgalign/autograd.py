"""Minimal reverse-mode automatic differentiation over numpy arrays.

Only the operations the encoder and losses need are implemented. All data
is float64; graphs are built per training step and discarded. Gradients
accumulate into `Tensor.grad` on leaves created with requires_grad=True.
"""

import numpy as np

from kgalign.errors import ContractViolation


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Backpropagate from a scalar output through the recorded graph."""
        if self.data.ndim != 0:
            raise ContractViolation("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad or p._parents:
                    stack.append((p, False))
        self.grad = np.ones((), dtype=np.float64)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Operator sugar; scalar operands are plain Python floats.
    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -other)

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not (t.requires_grad or t._parents):
        return
    t.grad = g if t.grad is None else t.grad + g


def _node(data: np.ndarray, parents: tuple, backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out._parents = parents
        out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[0]:
        raise ContractViolation(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _node(data, (a, b), backward)


def spmm(adj, x: Tensor) -> Tensor:
    """Sparse-adjacency @ dense product. The adjacency is symmetric by
    construction, so the backward product reuses the same matrix."""
    data = adj.matmul(x.data)

    def backward(g):
        _accumulate(x, adj.matmul(g))

    return _node(data, (x,), backward)


def add(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        data = a.data + float(b)

        def backward_scalar(g):
            _accumulate(a, g)

        return _node(data, (a,), backward_scalar)

    if a.data.shape == b.data.shape:
        data = a.data + b.data

        def backward_same(g):
            _accumulate(a, g)
            _accumulate(b, g)

        return _node(data, (a, b), backward_same)

    # Bias broadcast: (n, k) + (k,)
    if a.data.ndim == 2 and b.data.shape == (a.data.shape[1],):
        data = a.data + b.data

        def backward_bias(g):
            _accumulate(a, g)
            _accumulate(b, g.sum(axis=0))

        return _node(data, (a, b), backward_bias)
    raise ContractViolation(f"add shape mismatch: {a.data.shape} + {b.data.shape}")


def mul(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        c = float(b)
        data = a.data * c

        def backward_scalar(g):
            _accumulate(a, g * c)

        return _node(data, (a,), backward_scalar)

    if a.data.shape != b.data.shape:
        raise ContractViolation(f"mul shape mismatch: {a.data.shape} * {b.data.shape}")
    data = a.data * b.data

    def backward(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _node(data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)
    # Strict mask: subgradient 0 at the kink, so a dead hinge emits no signal.
    mask = x.data > 0.0

    def backward(g):
        _accumulate(x, g * mask)

    return _node(data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g):
        _accumulate(x, g * data * (1.0 - data))

    return _node(data, (x,), backward)


def absolute(x: Tensor) -> Tensor:
    data = np.abs(x.data)
    sign = np.sign(x.data)

    def backward(g):
        _accumulate(x, g * sign)

    return _node(data, (x,), backward)


def sqrt_clamped(x: Tensor, floor: float = 1e-12) -> Tensor:
    """Elementwise sqrt with the derivative clamped near zero to stay finite."""
    data = np.sqrt(np.maximum(x.data, 0.0))

    def backward(g):
        _accumulate(x, g / (2.0 * np.sqrt(np.maximum(x.data, floor))))

    return _node(data, (x,), backward)


def sum_rows(x: Tensor) -> Tensor:
    """Sum over axis 1: (n, k) -> (n,)."""
    data = x.data.sum(axis=1)

    def backward(g):
        _accumulate(x, np.repeat(g[:, None], x.data.shape[1], axis=1))

    return _node(data, (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    count = x.data.size
    data = np.asarray(x.data.mean())

    def backward(g):
        _accumulate(x, np.full(x.data.shape, float(g) / count))

    return _node(data, (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum())

    def backward(g):
        _accumulate(x, np.full(x.data.shape, float(g)))

    return _node(data, (x,), backward)


def gather_rows(x: Tensor, index: np.ndarray) -> Tensor:
    index = np.asarray(index, dtype=np.int64)
    data = x.data[index]

    def backward(g):
        acc = np.zeros_like(x.data)
        np.add.at(acc, index, g)
        _accumulate(x, acc)

    return _node(data, (x,), backward)


def concat_cols(parts: list[Tensor]) -> Tensor:
    data = np.concatenate([p.data for p in parts], axis=1)
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            _accumulate(p, g[:, lo:hi])

    return _node(data, tuple(parts), backward)


def normalize_rows(x: Tensor) -> Tensor:
    """Row-wise L2 normalization; all-zero rows pass through unchanged."""
    norms = np.linalg.norm(x.data, axis=1)
    nonzero = norms > 0
    safe = np.where(nonzero, norms, 1.0)
    data = x.data / safe[:, None]

    def backward(g):
        # d(x/|x|) = (g - (g.y) y) / |x| per row; zero rows keep zero grad.
        dot = (g * data).sum(axis=1, keepdims=True)
        _accumulate(x, nonzero[:, None] * (g - dot * data) / safe[:, None])

    return _node(data, (x,), backward)
