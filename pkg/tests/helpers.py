"""Finite-difference oracle and small fixtures shared by the tests."""

import numpy as np

from sigl import autodiff as ad


def central_difference(fn, arrays, step=1e-5):
    """d fn / d arrays by central differences; fn reads the arrays in place."""
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = a[i]
            a[i] = old + step
            hi = fn()
            a[i] = old - step
            lo = fn()
            a[i] = old
            g[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def relative_error(a, b, floor=1e-6):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def tape_gradients(build, params):
    """Reverse-mode gradients of the scalar built by ``build(tensors)``."""
    tensors = [ad.Tensor(p, requires_grad=True) for p in params]
    loss = build(tensors)
    ad.backward(loss)
    return float(loss.value), [t.grad.copy() for t in tensors]


def random_binary(rng, n, p=0.5):
    a = (rng.random((n, n)) < p).astype(np.float64)
    a = np.triu(a, 1)
    return a + a.T
