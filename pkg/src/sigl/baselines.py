"""Classical per-graph estimators: sorting-and-smoothing (SAS) and USVT."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SiglInputError
from .graphons import GraphonGrid, SampledGraph
from .gw import Expanded
from .histogram import pool_histogram

SAS = "sas"
USVT = "usvt"


@dataclass(frozen=True, eq=False)
class BaselineEstimate:
    values: np.ndarray
    method: str
    source_size: int

    @property
    def resolution(self) -> int:
        return self.values.shape[0]


def degree_order(adjacency) -> np.ndarray:
    """Nodes by non-increasing degree, ties by ascending index."""
    deg = np.asarray(adjacency).sum(axis=1, dtype=np.int64)
    return np.argsort(-deg, kind="stable")


def anisotropic_tv(x: np.ndarray) -> float:
    return float(np.abs(np.diff(x, axis=0)).sum() + np.abs(np.diff(x, axis=1)).sum())


def _grad(x):
    gv = np.zeros_like(x)
    gh = np.zeros_like(x)
    gv[:-1] = x[1:] - x[:-1]
    gh[:, :-1] = x[:, 1:] - x[:, :-1]
    return gv, gh


def _grad_adjoint(zv, zh):
    # D^T for forward differences with zero last row/column
    out = np.zeros_like(zv)
    out[:-1] -= zv[:-1]
    out[1:] += zv[:-1]
    out[:, :-1] -= zh[:, :-1]
    out[:, 1:] += zh[:, :-1]
    return out


def tv_denoise(y: np.ndarray, lam: float = 0.1, iters: int = 200) -> np.ndarray:
    """argmin_x 0.5 ||x - y||^2 + lam * TV_aniso(x) by projected gradient on the dual.

    The returned iterate is the one with the lowest primal objective seen,
    with y itself as the starting candidate, so TV never increases.
    """
    y = np.asarray(y, dtype=np.float64)
    if lam <= 0 or min(y.shape) < 2:
        return y.copy()
    zv = np.zeros_like(y)
    zh = np.zeros_like(y)
    step = 1.0 / (8.0 * lam)  # ||D||^2 <= 8
    best, best_obj = y.copy(), lam * anisotropic_tv(y)
    for _ in range(iters):
        x = y - lam * _grad_adjoint(zv, zh)
        gv, gh = _grad(x)
        zv = np.clip(zv + step * gv, -1.0, 1.0)
        zh = np.clip(zh + step * gh, -1.0, 1.0)
        x = y - lam * _grad_adjoint(zv, zh)
        obj = 0.5 * float(np.sum((x - y) ** 2)) + lam * anisotropic_tv(x)
        if obj < best_obj:
            best, best_obj = x, obj
    return best


def sas_estimate(graph: SampledGraph, h: int, lam: float = 0.1, iters: int = 200) -> BaselineEstimate:
    """Degree sort, h x h block means, then anisotropic TV smoothing."""
    order = degree_order(graph.adjacency)
    hist = pool_histogram(graph.adjacency[np.ix_(order, order)], h).values
    x = tv_denoise(hist, lam, iters)
    # the average with the transpose keeps symmetry without raising TV (convexity)
    x = np.clip(0.5 * (x + x.T), 0.0, 1.0)
    return BaselineEstimate(x, SAS, graph.n)


def usvt_estimate(graph: SampledGraph, threshold_scale: float = 0.2) -> BaselineEstimate:
    """Keep the eigen-components of A with |lambda| > scale * sqrt(n), clip to [0, 1]."""
    n = graph.n
    if n < 2:
        raise SiglInputError("usvt_estimate needs n >= 2")
    a = np.asarray(graph.adjacency, dtype=np.float64)
    w, V = np.linalg.eigh(a)
    keep = np.abs(w) > threshold_scale * np.sqrt(n)
    est = (V[:, keep] * w[keep]) @ V[:, keep].T
    est = np.clip(0.5 * (est + est.T), 0.0, 1.0)
    return BaselineEstimate(est, USVT, n)


def nearest_index(k: int, R: int) -> np.ndarray:
    return np.floor((np.arange(R) + 0.5) * k / R).astype(np.int64)


def pad_to_resolution(estimate: BaselineEstimate, R: int, mode: str = "nearest") -> GraphonGrid:
    """Bring a k x k estimate to R x R by nearest-neighbour upsampling or zero padding."""
    k = estimate.resolution
    if R < k:
        raise SiglInputError(f"target resolution {R} is below the estimate's {k}")
    if mode == "nearest":
        idx = nearest_index(k, R)
        return GraphonGrid(estimate.values[np.ix_(idx, idx)], R)
    if mode == "zero":
        out = np.zeros((R, R))
        out[:k, :k] = estimate.values
        return GraphonGrid(out, R)
    raise SiglInputError(f"unknown padding mode {mode!r}")


def as_expanded(estimate: BaselineEstimate, R: int, mode: str = "nearest") -> Expanded:
    """The padded R x R matrix in factored form for fast GW evaluation."""
    k = estimate.resolution
    if R < k:
        raise SiglInputError(f"target resolution {R} is below the estimate's {k}")
    if mode == "nearest":
        return Expanded(estimate.values, nearest_index(k, R))
    if mode == "zero":
        vals = np.zeros((k + 1, k + 1))
        vals[:k, :k] = estimate.values
        idx = np.full(R, k, dtype=np.int64)
        idx[:k] = np.arange(k)
        return Expanded(vals, idx)
    raise SiglInputError(f"unknown padding mode {mode!r}")


def write_matrix_csv(values: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(values):
            w.writerow([repr(float(v)) for v in row])
