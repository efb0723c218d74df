"""A small define-by-run reverse-mode autodiff engine over float64 arrays.

Every op evaluates eagerly and, when any input requires a gradient, records a
closure that maps the output cotangent to input cotangents.  ``backward``
walks the recorded graph in reverse topological order and sums cotangents of
shared subexpressions.  Only the ops the two network architectures need are
provided; broadcasting is limited to adding a bias row to a matrix.

``Adam``/``adam_step`` live here too since every trainable model uses them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import SiglInputError

__all__ = [
    "Tensor", "tensor", "matmul", "add", "sub", "mul", "scale", "sin", "relu", "square",
    "sum", "mean", "neighbor_mean", "concat", "clamp", "minmax_normalize", "pair_grid",
    "custom", "backward", "AdamState", "adam_step", "Adam",
]


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, value, requires_grad: bool = False, parents: Sequence["Tensor"] = (),
                 vjp: Callable | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = tuple(parents)
        self._vjp = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(value, requires_grad: bool = False) -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), requires_grad=requires_grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
    if any(p.requires_grad for p in parents):
        return Tensor(value, True, parents, vjp)
    return Tensor(value)


def custom(value, parents: Sequence[Tensor], vjp: Callable) -> Tensor:
    """Record an op with a hand-written vector-Jacobian product.

    ``vjp(g)`` must return one cotangent (or ``None``) per parent.  Fused
    kernels plug into the tape through this hook.
    """
    return _node(value, [_as_tensor(p) for p in parents], vjp)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise SiglInputError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return _node(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    if len(shape) == 0:
        return np.asarray(g.sum())
    # bias row added to every row of a matrix
    return g.sum(axis=0).reshape(shape)


def _check_add(a: Tensor, b: Tensor) -> tuple[int, ...]:
    sa, sb = a.shape, b.shape
    if sa == sb or len(sb) == 0 or len(sa) == 0:
        return np.broadcast_shapes(sa, sb)
    if len(sa) == 2 and len(sb) == 1 and sa[1] == sb[0]:
        return sa
    if len(sb) == 2 and len(sa) == 1 and sb[1] == sa[0]:
        return sb
    raise SiglInputError(f"add shape mismatch: {sa} + {sb}")


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_add(a, b)
    sa, sb = a.shape, b.shape
    return _node(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_add(a, b)
    sa, sb = a.shape, b.shape
    return _node(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    """Elementwise product of equal-shaped operands."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise SiglInputError(f"mul shape mismatch: {a.shape} * {b.shape}")
    av, bv = a.value, b.value
    return _node(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    return _node(a.value * c, (a,), lambda g: (g * c,))


def sin(a) -> Tensor:
    a = _as_tensor(a)
    av = a.value
    return _node(np.sin(av), (a,), lambda g: (g * np.cos(av),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.value > 0
    return _node(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    av = a.value
    return _node(av * av, (a,), lambda g: (2.0 * g * av,))


def sum(a) -> Tensor:  # noqa: A001 - mirrors numpy naming on purpose
    a = _as_tensor(a)
    shape = a.shape
    return _node(np.asarray(a.value.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def mean(a) -> Tensor:
    a = _as_tensor(a)
    shape, size = a.shape, a.value.size
    return _node(np.asarray(a.value.mean()), (a,), lambda g: (np.full(shape, float(g) / size),))


def neighbor_mean(adjacency: np.ndarray, z) -> Tensor:
    """Row i becomes the mean of z over the neighbours of i (zero if isolated)."""
    z = _as_tensor(z)
    adj = np.asarray(adjacency, dtype=np.float64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[1] != z.shape[0]:
        raise SiglInputError(f"neighbor_mean size mismatch: {adj.shape} vs {z.shape}")
    deg = adj.sum(axis=1)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)[:, None]
    out = (adj @ z.value) * inv
    return _node(out, (z,), lambda g: (adj.T @ (g * inv),))


def concat(a, b, axis: int = 1) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out = np.concatenate([a.value, b.value], axis=axis)
    except ValueError as exc:
        raise SiglInputError(f"concat shape mismatch: {a.shape}, {b.shape}") from exc
    cut = a.shape[axis]
    return _node(out, (a, b), lambda g: tuple(np.split(g, [cut], axis=axis)))


def clamp(a, lo: float = 0.0, hi: float = 1.0) -> Tensor:
    """Clip to [lo, hi]; the cotangent passes inside the interval, zero outside."""
    a = _as_tensor(a)
    inside = (a.value >= lo) & (a.value <= hi)
    return _node(np.clip(a.value, lo, hi), (a,), lambda g: (g * inside,))


def minmax_normalize(a) -> Tensor:
    """(a - min a) / (max a - min a); a constant vector maps to 0.5."""
    a = _as_tensor(a)
    v = a.value
    if v.ndim != 1 or v.size == 0:
        raise SiglInputError("minmax_normalize expects a non-empty vector")
    imin, imax = int(np.argmin(v)), int(np.argmax(v))
    lo, hi = v[imin], v[imax]
    span = hi - lo
    if span <= 0:
        return _node(np.full(v.shape, 0.5), (a,), lambda g: (np.zeros_like(g),))
    out = (v - lo) / span

    def vjp(g):
        grad = g / span
        # d out_i / d lo = (out_i - 1) / span, d out_i / d hi = -out_i / span
        grad[imin] += float(np.dot(g, out - 1.0)) / span
        grad[imax] -= float(np.dot(g, out)) / span
        return (grad,)

    return _node(out, (a,), vjp)


def pair_grid(eta) -> Tensor:
    """All ordered pairs (eta_i, eta_j) as an (n*n, 2) matrix, row index i*n + j."""
    eta = _as_tensor(eta)
    v = eta.value
    n = v.size
    out = np.empty((n * n, 2))
    out[:, 0] = np.repeat(v, n)
    out[:, 1] = np.tile(v, n)

    def vjp(g):
        g = g.reshape(n, n, 2)
        return (g[:, :, 0].sum(axis=1) + g[:, :, 1].sum(axis=0),)

    return _node(out, (eta,), vjp)


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Populate ``.grad`` on every ancestor of the scalar ``root`` that requires it."""
    if root.value.size != 1:
        raise SiglInputError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return
    grads = {id(root): np.ones_like(root.value)}
    for node in reversed(_topological(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g
        if node._vjp is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    if len(params) != len(grads):
        raise SiglInputError("adam_step: params and grads differ in length")
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step_count
    bc2 = 1.0 - b2 ** state.step_count
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if g.shape != p.shape:
            raise SiglInputError(f"adam_step: gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


class Adam:
    """Adam over a fixed list of leaf tensors; reads and clears their ``.grad``."""

    def __init__(self, params: Iterable[Tensor], lr: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        grads = [np.zeros_like(p.value) if p.grad is None else p.grad for p in self.params]
        adam_step([p.value for p in self.params], grads, self.state)
