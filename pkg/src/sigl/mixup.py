"""Graphon mixup: interpolate two class graphons and their labels, then sample."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SiglInputError
from .graphons import Graphon, Mixture, SampledGraph, sample_graph, write_edge_list
from .rng import derive_seed, stream

_KEY_SIZES = 51
_KEY_GRAPHS = 52


def _check_label(y, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise SiglInputError(f"{name} must be a non-empty vector")
    if np.any(y < 0) or abs(y.sum() - 1.0) > 1e-9:
        raise SiglInputError(f"{name} must be a probability vector")
    return y


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise SiglInputError(f"lambda must lie in [0, 1], got {lam}")
    return lam


@dataclass(frozen=True, eq=False)
class MixupRecipe:
    lam: float
    left: Graphon
    right: Graphon
    left_label: np.ndarray
    right_label: np.ndarray

    def __post_init__(self):
        _check_lambda(self.lam)
        a = _check_label(self.left_label, "left_label")
        b = _check_label(self.right_label, "right_label")
        if a.size != b.size:
            raise SiglInputError("label vectors must have equal length")

    def graphon(self) -> Mixture:
        return mix_graphons(self.left, self.right, self.lam)

    def label(self) -> np.ndarray:
        return mix_labels(self.left_label, self.right_label, self.lam)


def mix_graphons(left: Graphon, right: Graphon, lam: float) -> Mixture:
    """lam * left + (1 - lam) * right."""
    return Mixture(_check_lambda(lam), left, right)


def mix_labels(y_left, y_right, lam: float) -> np.ndarray:
    lam = _check_lambda(lam)
    a = _check_label(y_left, "y_left")
    b = _check_label(y_right, "y_right")
    if a.size != b.size:
        raise SiglInputError(f"label lengths differ: {a.size} vs {b.size}")
    return lam * a + (1.0 - lam) * b


def sampling_plan(count: int, size_range: Sequence[int], seed: int) -> list:
    """(size, graph seed) for each augmented graph; independent of the graphons."""
    if count < 1:
        raise SiglInputError("count must be >= 1")
    n_min, n_max = (int(v) for v in size_range)
    if n_min < 2 or n_min > n_max:
        raise SiglInputError(f"invalid size range [{n_min}, {n_max}]")
    sizes = stream(seed, _KEY_SIZES).integers(n_min, n_max + 1, size=count)
    return [(int(n), derive_seed(seed, _KEY_GRAPHS, i)) for i, n in enumerate(sizes)]


def generate_augmented(recipe: MixupRecipe, count: int, size_range: Sequence[int],
                       seed: int) -> list[tuple[SampledGraph, np.ndarray]]:
    """Sample ``count`` graphs from the mixed graphon, each tagged with the mixed label."""
    spec = recipe.graphon()
    label = recipe.label()
    return [(sample_graph(spec, n, s), label.copy()) for n, s in sampling_plan(count, size_range, seed)]


def export_augmented(samples, directory) -> None:
    """graph_XXXX.txt edge lists plus labels.csv."""
    os.makedirs(directory, exist_ok=True)
    if not samples:
        return
    width = len(samples[0][1])
    with open(os.path.join(directory, "labels.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "n"] + [f"y{c}" for c in range(width)])
        for i, (g, y) in enumerate(samples):
            name = f"graph_{i:04d}.txt"
            write_edge_list(g, os.path.join(directory, name))
            w.writerow([name, g.n] + [repr(float(v)) for v in y])


def pooled_density(graphs: Sequence[SampledGraph]) -> tuple[float, float]:
    """Edge density over all node pairs of all graphs, with its Bernoulli std error."""
    edges = sum(int(np.triu(g.adjacency, 1).sum()) for g in graphs)
    pairs = sum(g.n * (g.n - 1) // 2 for g in graphs)
    p = edges / pairs
    return p, float(np.sqrt(max(p * (1 - p), 1e-12) / pairs))
