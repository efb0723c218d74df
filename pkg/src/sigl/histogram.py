"""Step 2: block-average sorted adjacencies and build the coordinate dataset."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SiglInputError
from .kernels import pool_blocks

CENTERS = "centers"
RIGHT_EDGE = "right-edge"


@dataclass(frozen=True, eq=False)
class Histogram:
    values: np.ndarray
    k: int
    source_size: int
    window: int


@dataclass(frozen=True, eq=False)
class CoordinateDataset:
    """Columns of the supervised set: one row per (graph, i <= j) bin."""

    x: np.ndarray
    y: np.ndarray
    target: np.ndarray
    weight: np.ndarray
    graph_index: np.ndarray

    def __len__(self) -> int:
        return self.x.size

    def coords(self) -> np.ndarray:
        return np.stack([self.x, self.y], axis=1)


def pool_histogram(sorted_adjacency, h: int) -> Histogram:
    """Mean over non-overlapping h x h blocks; rows/columns beyond k*h are dropped."""
    a = np.asarray(sorted_adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SiglInputError(f"pool_histogram needs a square matrix, got {a.shape}")
    n = a.shape[0]
    h = int(h)
    if h < 1:
        raise SiglInputError("pooling window must be >= 1")
    if h > n:
        raise SiglInputError(f"pooling window {h} exceeds matrix size {n}")
    vals = pool_blocks(a, h)
    return Histogram(vals, vals.shape[0], n, h)


def default_window(n: int) -> int:
    """round(ln n) with halves rounded up, at least 1."""
    if n < 1:
        raise SiglInputError("default_window needs n >= 1")
    return max(1, int(math.floor(math.log(n) + 0.5)))


def build_coordinate_dataset(histograms: Sequence[Histogram], graph_sizes: Sequence[int],
                             variant: str = CENTERS) -> CoordinateDataset:
    """Upper triangle (diagonal included) of every histogram as weighted points.

    Coordinates are bin centers (i - 1/2)/k, or i/k for ``variant="right-edge"``.
    Points from graph t carry w_t = n_t / sum(n).
    """
    if len(histograms) != len(graph_sizes):
        raise SiglInputError("histograms and graph_sizes must align")
    if variant not in (CENTERS, RIGHT_EDGE):
        raise SiglInputError(f"unknown coordinate variant {variant!r}")
    sizes = np.asarray(graph_sizes, dtype=np.float64)
    weights = sizes / sizes.sum() if len(sizes) else sizes
    cols = {name: [] for name in ("x", "y", "target", "weight", "graph_index")}
    for t, hist in enumerate(histograms):
        k = hist.k
        iu, ju = np.triu_indices(k)
        shift = 0.5 if variant == CENTERS else 0.0
        cols["x"].append((iu + 1 - shift) / k)
        cols["y"].append((ju + 1 - shift) / k)
        cols["target"].append(hist.values[iu, ju])
        cols["weight"].append(np.full(iu.size, weights[t]))
        cols["graph_index"].append(np.full(iu.size, t, dtype=np.int64))
    if not histograms:
        return CoordinateDataset(*(np.empty(0) for _ in range(4)), np.empty(0, dtype=np.int64))
    return CoordinateDataset(*(np.concatenate(cols[c]) for c in cols))


def export_dataset_csv(dataset: CoordinateDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_index", "x", "y", "target", "weight"])
        for row in zip(dataset.graph_index.tolist(), dataset.x.tolist(), dataset.y.tolist(),
                       dataset.target.tolist(), dataset.weight.tolist()):
            w.writerow([row[0]] + [repr(v) for v in row[1:]])
