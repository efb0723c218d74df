"""Parametric graphon families: one 3-input INR f(x, y, z) over many graphons.

A sorter pretrained on an unrelated graphon orders every graph.  Each graph
also gets a scalar coordinate z_t = d_t / sum_k d_k, where d_t is the GW
distance between its adjacency and a reference grid B_r read off the
sorter's auxiliary graphon.  The INR is then fitted to all histograms with z_t
as a third input.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .errors import ModelFormatError, SiglInputError
from .estimator import SiglConfig, sample_estimate, sigl_estimate, train_inr
from .graphons import Graphon, GraphonGrid, ParametricMono, ParametricSbm, SampledGraph, sample_graph
from .gw import estimation_error, gw_distance
from .histogram import build_coordinate_dataset, pool_histogram
from .nn import SCHEMA_VERSION, SirenInr, load_json, save_json
from .rng import derive_seed, stream
from .sorting import SortingModel, sort_dataset, train_sorting

_KEY_PRETRAIN = 41
_KEY_FAMILY_GRAPHS = 42
_KEY_SPLIT = 43
_KEY_FAMILY_INR = 44
_KEY_SINGLE = 45

DEFAULT_SIZES = tuple(range(75, 301, 25))
MONO_ALPHAS = (1.0, 1 / 1.2, 1 / 1.4, 1 / 1.6, 1 / 1.8, 1 / 2)
SBM_ALPHAS = (0.1, 0.2, 0.3, 0.4)
REFERENCE_RESOLUTION = 100
TEST_FRACTION = 0.2


@dataclass(eq=False)
class FamilyModel:
    sorter: SortingModel
    reference_grid: GraphonGrid
    inr3d: SirenInr
    latent_table: list  # z_t per training graph
    denominator: float  # sum of training distances, reused for unseen graphs
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.inr3d.input_dim != 3:
            raise SiglInputError("a family model needs a 3-input INR")


def pretrain_sorter(independent_spec: Graphon, config: Optional[SiglConfig] = None,
                    sizes: Sequence[int] = DEFAULT_SIZES, seed: int = 0) -> SortingModel:
    """Train Step 1 on graphs from ``independent_spec`` and return the frozen sorter."""
    config = config or SiglConfig()
    graphs = [sample_graph(independent_spec, int(n), derive_seed(seed, _KEY_PRETRAIN, t))
              for t, n in enumerate(sizes)]
    return train_sorting(graphs, config.sorting_config(), seed=derive_seed(seed, _KEY_PRETRAIN, 1 << 16))


def reference_grid(sorter: SortingModel, resolution: int = REFERENCE_RESOLUTION) -> GraphonGrid:
    """B_r: the sorter's auxiliary graphon sampled at bin centers."""
    return sample_estimate(sorter.aux_graphon, resolution)


def gw_to_reference(dataset: Sequence[SampledGraph], B_r: GraphonGrid) -> np.ndarray:
    if len(dataset) == 0:
        raise SiglInputError("need at least one graph")
    return np.array([gw_distance(g.adjacency.astype(np.float64), B_r.values).distance for g in dataset])


def normalize_distances(d, denominator: Optional[float] = None) -> np.ndarray:
    """z = d / denominator (default sum(d)); all-zero distances give uniform z."""
    d = np.asarray(d, dtype=np.float64)
    denom = float(d.sum()) if denominator is None else float(denominator)
    if denom <= 0.0:
        return np.full(d.size, 1.0 / d.size)
    return d / denom


def compute_latents_z(dataset: Sequence[SampledGraph], B_r: GraphonGrid) -> list:
    """z_t = GW(A_t, B_r) / sum_k GW(A_k, B_r)."""
    return normalize_distances(gw_to_reference(dataset, B_r)).tolist()


def train_family(dataset: Sequence[SampledGraph], sorter: SortingModel,
                 config: Optional[SiglConfig] = None,
                 reference_resolution: int = REFERENCE_RESOLUTION) -> FamilyModel:
    """Sort with the frozen sorter, pool, attach z_t and fit f(x, y, z)."""
    config = config or SiglConfig()
    if len(dataset) == 0:
        raise SiglInputError("train_family needs at least one graph")
    B_r = reference_grid(sorter, reference_resolution)
    d = gw_to_reference(dataset, B_r)
    denom = float(d.sum())
    z = normalize_distances(d)
    # unseen graphs: features come from the sorter seed and the graph seed
    sorted_pairs = sort_dataset(sorter, dataset, training_features=False)
    hists = [pool_histogram(adj, config.window_for(g.n)) for (adj, _), g in zip(sorted_pairs, dataset)]
    data = build_coordinate_dataset(hists, [g.n for g in dataset], config.coordinate_variant)
    history: list = []
    inr = train_inr(data, config, seed=derive_seed(config.seed, _KEY_FAMILY_INR), input_dim=3,
                    extra=z[data.graph_index], history=history)
    return FamilyModel(sorter, B_r, inr, z.tolist(), denom, history)


def latent_for(model: FamilyModel, graphs: Sequence[SampledGraph]) -> np.ndarray:
    """z for unseen graphs, scaled by the training denominator."""
    return normalize_distances(gw_to_reference(graphs, model.reference_grid), model.denominator)


def query_family(model: FamilyModel, z: float, R: int) -> GraphonGrid:
    if not 0.0 <= float(z) <= 1.0:
        raise SiglInputError(f"z must lie in [0, 1], got {z}")
    return sample_estimate(model.inr3d, R, float(z))


def save_family(model: FamilyModel, directory) -> None:
    """sorter.json, inr3d.json, reference.csv, latents.csv and family.json."""
    os.makedirs(directory, exist_ok=True)
    save_json(model.sorter.to_dict(), os.path.join(directory, "sorter.json"))
    save_json(model.inr3d.to_dict(), os.path.join(directory, "inr3d.json"))
    with open(os.path.join(directory, "reference.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        for row in model.reference_grid.values:
            w.writerow([repr(float(v)) for v in row])
    with open(os.path.join(directory, "latents.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_index", "z"])
        for t, z in enumerate(model.latent_table):
            w.writerow([t, repr(float(z))])
    with open(os.path.join(directory, "family.json"), "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "kind": "family_model",
                   "denominator": float(model.denominator)}, fh, indent=1)
        fh.write("\n")


def load_family(directory) -> FamilyModel:
    meta = load_json(os.path.join(directory, "family.json"))
    found = meta.get("schema_version") if isinstance(meta, dict) else None
    if found != SCHEMA_VERSION:
        raise ModelFormatError(
            f"family_model document schema_version mismatch: expected {SCHEMA_VERSION}, found {found!r}")
    sorter = SortingModel.from_dict(load_json(os.path.join(directory, "sorter.json")))
    inr = SirenInr.from_dict(load_json(os.path.join(directory, "inr3d.json")))
    try:
        with open(os.path.join(directory, "reference.csv"), newline="") as fh:
            ref = np.array([[float(v) for v in row] for row in csv.reader(fh)])
        with open(os.path.join(directory, "latents.csv"), newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        z = [float(r[1]) for r in rows]
        grid = GraphonGrid(ref, ref.shape[0])
    except (ValueError, IndexError, SiglInputError) as exc:
        raise ModelFormatError(f"malformed family model files in {directory}: {exc}") from exc
    return FamilyModel(sorter, grid, inr, z, float(meta["denominator"]))


def family_spec(family: str, alpha: float) -> Graphon:
    if family == "mono":
        return ParametricMono(alpha)
    if family == "sbm":
        return ParametricSbm(alpha)
    raise SiglInputError(f"unknown family {family!r}; expected 'mono' or 'sbm'")


def default_alphas(family: str) -> tuple:
    if family == "mono":
        return MONO_ALPHAS
    if family == "sbm":
        return SBM_ALPHAS
    raise SiglInputError(f"unknown family {family!r}; expected 'mono' or 'sbm'")


def split_groups(groups: np.ndarray, seed: int, test_fraction: float = TEST_FRACTION):
    """Per-group random split; each group keeps round(fraction * size) test graphs, at least 1."""
    rng = stream(seed, _KEY_SPLIT)
    test = np.zeros(groups.size, dtype=bool)
    for g in np.unique(groups):
        members = np.flatnonzero(groups == g)
        k = max(1, int(np.floor(test_fraction * members.size + 0.5)))
        if k >= members.size:
            raise SiglInputError("every group needs at least two graphs for a train/test split")
        test[rng.permutation(members)[:k]] = True
    return ~test, test


@dataclass
class FamilyTrial:
    """Per-group outcome of one trial."""

    alphas: list
    mean_z: list  # mean z over each group's test graphs
    grouped_error: list  # GW of f(., ., mean z) against the true member graphon
    single_error: list  # GW of a single-graphon run on the group's training graphs
    test_z: list  # (alpha, z) for every test graph
    wall_time: float = 0.0


def run_family_trial(family: str, sorter: SortingModel, alphas: Sequence[float], seed: int,
                     config: Optional[SiglConfig] = None, sizes: Sequence[int] = DEFAULT_SIZES,
                     R: int = 1000, single: bool = True) -> FamilyTrial:
    """Sample one graph of every size per alpha, split 80/20 within groups, train and score."""
    import time

    base = config or SiglConfig()
    graphs, groups = [], []
    for a_i, alpha in enumerate(alphas):
        spec = family_spec(family, alpha)
        for t, n in enumerate(sizes):
            graphs.append(sample_graph(spec, int(n), derive_seed(seed, _KEY_FAMILY_GRAPHS, a_i, t)))
            groups.append(a_i)
    groups = np.asarray(groups)
    train, test = split_groups(groups, seed)
    cfg = SiglConfig(**{**base.__dict__, "seed": derive_seed(seed, _KEY_FAMILY_INR)})
    train_graphs = [g for g, keep in zip(graphs, train) if keep]
    test_graphs = [g for g, keep in zip(graphs, test) if keep]
    t0 = time.perf_counter()
    model = train_family(train_graphs, sorter, cfg)
    wall = time.perf_counter() - t0
    z_test = latent_for(model, test_graphs)
    test_groups = groups[test]
    out = FamilyTrial([float(a) for a in alphas], [], [], [], [], wall)
    for a_i, alpha in enumerate(alphas):
        zg = z_test[test_groups == a_i]
        out.test_z.extend((float(alpha), float(z)) for z in zg)
        mz = float(np.clip(zg.mean(), 0.0, 1.0))
        out.mean_z.append(mz)
        spec = family_spec(family, alpha)
        out.grouped_error.append(estimation_error(spec, query_family(model, mz, R)))
        if single:
            own = [g for g, keep, gr in zip(graphs, train, groups) if keep and gr == a_i]
            scfg = SiglConfig(**{**base.__dict__, "seed": derive_seed(seed, _KEY_SINGLE, a_i)})
            res = sigl_estimate(own, scfg)
            out.single_error.append(estimation_error(spec, sample_estimate(res.inr, R)))
    return out


def z_alpha_correlation(alphas: Sequence[float], mean_z: Sequence[float]) -> float:
    """Spearman correlation between alpha and the group-mean z."""
    rho = spearmanr(np.asarray(alphas), np.asarray(mean_z)).correlation
    return float(rho)
