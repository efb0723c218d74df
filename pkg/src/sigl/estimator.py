"""Step 3 and the full pipeline: sort, pool, regress an INR, sample it anywhere."""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .errors import SiglInputError
from .graphons import LIPSCHITZ, Graphon, GraphonGrid, SampledGraph, Synthetic, discretize
from .histogram import (CENTERS, CoordinateDataset, Histogram, build_coordinate_dataset,
                        default_window, pool_histogram)
from .nn import SirenInr, load_json, save_json
from .rng import derive_seed, stream
from .sorting import NodeOrdering, SortingConfig, SortingModel, sort_dataset, train_sorting

_KEY_SORTER = 21
_KEY_INR = 22
_KEY_SHUFFLE = 23


@dataclass
class SiglConfig:
    epochs_step1: int = 100
    epochs_step3: int = 100
    lr: float = 0.01
    coord_batch: int = 512
    window: Optional[int] = None  # None -> default_window(n) per graph
    coordinate_variant: str = CENTERS
    seed: int = 0
    inr_widths: tuple = (20, 20)
    omega0: float = 10.0

    def __post_init__(self):
        if self.epochs_step1 < 0 or self.epochs_step3 < 0:
            raise SiglInputError("epoch counts must be non-negative")
        if self.lr <= 0 or self.coord_batch < 1:
            raise SiglInputError("lr must be > 0 and coord_batch >= 1")
        if self.window is not None and int(self.window) < 1:
            raise SiglInputError("window must be >= 1")
        self.inr_widths = tuple(int(w) for w in self.inr_widths)

    def sorting_config(self) -> SortingConfig:
        return SortingConfig(epochs=self.epochs_step1, lr=self.lr, omega0=self.omega0)

    def window_for(self, n: int) -> int:
        return default_window(n) if self.window is None else int(self.window)


@dataclass(eq=False)
class SiglResult:
    inr: SirenInr
    sorter: SortingModel
    orderings: list
    histograms: list
    dataset: CoordinateDataset
    config: SiglConfig
    inr_loss_history: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def wall_time(self) -> float:
        return sum(self.timings.values())


@dataclass(frozen=True)
class ConsistencyReport:
    tau: float
    eps_tr: float
    empirical_mse: float
    n_max: int
    window: int
    lipschitz_inr: float
    lipschitz_true: Optional[float]
    bound: Optional[float]

    def holds(self) -> Optional[bool]:
        return None if self.bound is None else self.empirical_mse <= self.bound


def _weighted_sym_loss(model: SirenInr, params, pts: np.ndarray, target: np.ndarray,
                       weight: np.ndarray) -> ad.Tensor:
    # both orientations of each point, so f is fitted on the full square
    b = pts.shape[0]
    swapped = pts.copy()
    swapped[:, [0, 1]] = pts[:, [1, 0]]
    both = np.concatenate([pts, swapped], axis=0)
    pred = model.forward_tape(both, params)
    t = np.concatenate([target, target])[:, None]
    w = np.concatenate([weight, weight])[:, None] / (2 * b)
    r = ad.sub(pred, t)
    return ad.sum(ad.mul(ad.square(r), ad.Tensor(np.broadcast_to(w, r.shape).copy())))


def dataset_inr_loss(model: SirenInr, dataset: CoordinateDataset) -> float:
    """Weighted symmetric regression loss over the whole dataset (per-point mean)."""
    xy = dataset.coords()
    r1 = model.forward(xy) - dataset.target
    r2 = model.forward(xy[:, ::-1]) - dataset.target
    return float(np.mean(dataset.weight * 0.5 * (r1 * r1 + r2 * r2)))


def train_inr(dataset: CoordinateDataset, config: Optional[SiglConfig] = None,
              seed: Optional[int] = None, input_dim: int = 2, extra: Optional[np.ndarray] = None,
              history: Optional[list] = None) -> SirenInr:
    """Fit f_theta to the dataset with Adam on shuffled mini-batches.

    Each point enters with its graph weight and in both argument orders.  For
    a 3-input network ``extra`` supplies the per-point third coordinate.
    """
    config = config or SiglConfig()
    if len(dataset) == 0:
        raise SiglInputError("cannot train an INR on an empty dataset")
    seed = config.seed if seed is None else seed
    model = SirenInr(input_dim, config.inr_widths, config.omega0, seed=derive_seed(seed, _KEY_INR))
    params = [ad.Tensor(p, requires_grad=True) for p in model.parameters()]
    opt = ad.Adam(params, lr=config.lr)
    xy = dataset.coords()
    if input_dim == 3:
        if extra is None or len(extra) != len(dataset):
            raise SiglInputError("a 3-input INR needs one extra coordinate per point")
        ex = np.asarray(extra, dtype=np.float64)
    rng = stream(seed, _KEY_SHUFFLE)
    m = len(dataset)
    for _ in range(config.epochs_step3):
        order = rng.permutation(m)
        total = 0.0
        for start in range(0, m, config.coord_batch):
            idx = order[start:start + config.coord_batch]
            opt.zero_grad()
            pts = np.column_stack([xy[idx], ex[idx]]) if input_dim == 3 else xy[idx]
            loss = _weighted_sym_loss(model, params, pts, dataset.target[idx], dataset.weight[idx])
            ad.backward(loss)
            opt.step()
            total += float(loss.value) * idx.size
        if history is not None:
            history.append(total / m)
    model.set_parameters([p.value for p in params])
    return model


def centers(r: int) -> np.ndarray:
    return (np.arange(1, r + 1, dtype=np.float64) - 0.5) / r


def sample_estimate(model: SirenInr, R: int, z: Optional[float] = None) -> GraphonGrid:
    """clamp(0.5 (f(c_i, c_j) + f(c_j, c_i))) at c_i = (i - 1/2)/R."""
    if R < 1:
        raise SiglInputError("resolution must be >= 1")
    c = centers(R)
    F = np.empty((R, R))
    rows = max(1, 65536 // R)
    for start in range(0, R, rows):
        ci = c[start:start + rows]
        x = np.repeat(ci, R)
        y = np.tile(c, ci.size)
        cols = [x, y] if model.input_dim == 2 else [x, y, np.full(x.size, float(z))]
        if model.input_dim == 3 and z is None:
            raise SiglInputError("a 3-input INR needs z to be sampled")
        F[start:start + ci.size] = model.forward(np.stack(cols, axis=1)).reshape(ci.size, R)
    return GraphonGrid(np.clip(0.5 * (F + F.T), 0.0, 1.0), R)


def sigl_estimate(graphs: Sequence[SampledGraph], config: Optional[SiglConfig] = None) -> SiglResult:
    """Steps 1-3 end to end."""
    config = config or SiglConfig()
    if len(graphs) == 0:
        raise SiglInputError("sigl_estimate needs at least one graph")
    timings = {}
    t0 = time.perf_counter()
    sorter = train_sorting(graphs, config.sorting_config(), seed=derive_seed(config.seed, _KEY_SORTER))
    sorted_pairs = sort_dataset(sorter, graphs)
    timings["step1"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    hists = [pool_histogram(adj, config.window_for(g.n)) for (adj, _), g in zip(sorted_pairs, graphs)]
    data = build_coordinate_dataset(hists, [g.n for g in graphs], config.coordinate_variant)
    timings["step2"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    hist_losses: list = []
    inr = train_inr(data, config, history=hist_losses)
    timings["step3"] = time.perf_counter() - t0
    return SiglResult(inr, sorter, [o for _, o in sorted_pairs], hists, data, config, hist_losses, timings)


def ordering_tau(true_latents: np.ndarray, est_latents: np.ndarray) -> float:
    """max_i |eta[pi_hat(i)] - eta[pi(i)]|, minimized over eta_hat vs 1 - eta_hat."""
    eta = np.asarray(true_latents, dtype=np.float64)
    est = np.asarray(est_latents, dtype=np.float64)
    oracle = np.sort(eta)[::-1]
    best = np.inf
    for e in (est, 1.0 - est):
        perm = np.argsort(-e, kind="stable")
        best = min(best, float(np.max(np.abs(eta[perm] - oracle))))
    return best


def inr_lipschitz(model: SirenInr, grid: int = 200, z: Optional[float] = None) -> float:
    """Largest forward-difference slope of f along either axis on a grid."""
    g = np.linspace(0.0, 1.0, grid + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    cols = [X.ravel(), Y.ravel()]
    if model.input_dim == 3:
        cols.append(np.full(X.size, float(z)))
    F = model.forward(np.stack(cols, axis=1)).reshape(X.shape)
    d = 1.0 / grid
    return float(max(np.abs(np.diff(F, axis=0)).max(), np.abs(np.diff(F, axis=1)).max()) / d)


def consistency_report(true_spec: Graphon, result: SiglResult, graphs: Sequence[SampledGraph],
                       R: int = 1000) -> ConsistencyReport:
    """tau, eps_tr, grid MSE and the resulting error bound on the largest graph."""
    if any(g.latents is None for g in graphs):
        raise SiglInputError("consistency_report needs graphs with true latents")
    t = int(np.argmax([g.n for g in graphs]))
    n = graphs[t].n
    tau = ordering_tau(graphs[t].latents, result.orderings[t].latents)
    data = result.dataset
    eps_tr = float(np.max(np.abs(result.inr.forward(data.coords()) - data.target)))
    est = sample_estimate(result.inr, R).values
    truth = discretize(true_spec, R).values
    # the learned order may be globally reversed; compare both orientations
    mse = min(float(np.mean((est - truth) ** 2)), float(np.mean((est[::-1, ::-1] - truth) ** 2)))
    h = result.histograms[t].window
    lip = inr_lipschitz(result.inr)
    L = LIPSCHITZ.get(true_spec.id) if isinstance(true_spec, Synthetic) else None
    bound = None
    if L is not None:
        bound = eps_tr + 4 * L * L * tau * tau + 0.5 * lip * lip * h * h / (n * n) + (3 + 4 * tau * tau) / (h * h)
    return ConsistencyReport(tau, eps_tr, mse, n, h, lip, L, bound)


def save_result(result: SiglResult, directory, report: Optional[ConsistencyReport] = None) -> None:
    """sorter.json, inr.json, diagnostics.csv and config.json under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    save_json(result.sorter.to_dict(), os.path.join(directory, "sorter.json"))
    save_json(result.inr.to_dict(), os.path.join(directory, "inr.json"))
    cfg = asdict(result.config)
    cfg["inr_widths"] = list(cfg["inr_widths"])
    with open(os.path.join(directory, "config.json"), "w") as fh:
        json.dump(cfg, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(directory, "diagnostics.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "value"])
        w.writerow(["step1_final_loss", repr(result.sorter.loss_history[-1]) if result.sorter.loss_history else ""])
        w.writerow(["step3_final_loss", repr(result.inr_loss_history[-1]) if result.inr_loss_history else ""])
        w.writerow(["dataset_points", len(result.dataset)])
        if report is not None:
            for k, v in asdict(report).items():
                w.writerow([k, "" if v is None else repr(v)])


def load_model(directory) -> tuple[SirenInr, SortingModel]:
    """The INR and sorter written by save_result."""
    inr = SirenInr.from_dict(load_json(os.path.join(directory, "inr.json")))
    sorter = SortingModel.from_dict(load_json(os.path.join(directory, "sorter.json")))
    return inr, sorter
