"""Trial runners shared by the command line and the acceptance checks."""

from __future__ import annotations

import time
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .baselines import SAS, USVT, as_expanded, sas_estimate, usvt_estimate
from .estimator import SiglConfig, SiglResult, ordering_tau, sample_estimate, sigl_estimate
from .errors import SiglInputError
from .graphons import Graphon, SampledGraph, sample_graph
from .gw import estimation_error
from .histogram import default_window
from .rng import derive_seed

SIGL = "sigl"
METHODS = (SIGL, SAS, USVT)
BASE_SIZES = tuple(range(75, 301, 25))

_KEY_GRAPHS = 61
_KEY_MODEL = 62

RESULT_FIELDS = ("method", "graphon_id", "trial", "n_max", "offset", "gw_error",
                 "wall_time_seconds", "tau", "eps_tr")


@dataclass
class ResultRow:
    method: str
    graphon_id: str
    trial: int
    n_max: int
    offset: Optional[int] = None
    gw_error: Optional[float] = None
    wall_time_seconds: Optional[float] = None
    tau: Optional[float] = None
    eps_tr: Optional[float] = None

    def cells(self, include_time: bool = True) -> list:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "wall_time_seconds" and not include_time:
                v = None
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def dataset_sizes(offset: int = 0, count: int = len(BASE_SIZES)) -> list:
    """offset + {75, 100, ..., 300}, truncated to the first ``count`` sizes."""
    if not 1 <= count <= len(BASE_SIZES):
        raise SiglInputError(f"number of graphs must lie in [1, {len(BASE_SIZES)}]")
    return [offset + n for n in BASE_SIZES[:count]]


def make_dataset(spec: Graphon, sizes: Sequence[int], seed: int, trial: int) -> list:
    return [sample_graph(spec, int(n), derive_seed(seed, _KEY_GRAPHS, trial, t))
            for t, n in enumerate(sizes)]


@dataclass
class MethodOutcome:
    method: str
    gw_error: float
    wall_time: float
    tau: Optional[float] = None
    eps_tr: Optional[float] = None
    result: Optional[SiglResult] = None
    estimate: Optional[np.ndarray] = None  # baseline matrix that was scored


def run_sigl(spec: Graphon, graphs: Sequence[SampledGraph], seed: int, trial: int,
             window: Optional[int] = None, R: int = 1000, config: Optional[SiglConfig] = None) -> MethodOutcome:
    base = config or SiglConfig()
    cfg = SiglConfig(**{**base.__dict__, "seed": derive_seed(seed, _KEY_MODEL, trial), "window": window})
    res = sigl_estimate(graphs, cfg)
    err = estimation_error(spec, sample_estimate(res.inr, R))
    t = int(np.argmax([g.n for g in graphs]))
    tau = None
    if graphs[t].latents is not None:
        tau = ordering_tau(graphs[t].latents, res.orderings[t].latents)
    data = res.dataset
    eps_tr = float(np.max(np.abs(res.inr.forward(data.coords()) - data.target)))
    return MethodOutcome(SIGL, err, res.wall_time, tau, eps_tr, result=res)


def run_baseline(method: str, spec: Graphon, graphs: Sequence[SampledGraph], window: Optional[int] = None,
                 R: int = 1000, lam: float = 0.1, aggregate: str = "best",
                 padding: str = "nearest") -> MethodOutcome:
    """Per-graph estimates; the trial reports the best (or mean) GW error over graphs."""
    if aggregate not in ("best", "mean"):
        raise SiglInputError(f"unknown aggregate mode {aggregate!r}")
    t0 = time.perf_counter()
    ests = []
    for g in graphs:
        if method == SAS:
            ests.append(sas_estimate(g, default_window(g.n) if window is None else window, lam))
        elif method == USVT:
            ests.append(usvt_estimate(g))
        else:
            raise SiglInputError(f"unknown baseline {method!r}")
    wall = time.perf_counter() - t0
    errs = [estimation_error(spec, as_expanded(e, R, padding), R) for e in ests]
    i = int(np.argmin(errs))
    err = float(errs[i]) if aggregate == "best" else float(np.mean(errs))
    return MethodOutcome(method, err, wall, estimate=ests[i].values)


def run_trial(spec: Graphon, trial: int, seed: int, methods: Sequence[str] = METHODS, offset: int = 0,
              num_graphs: int = len(BASE_SIZES), window: Optional[int] = None, R: int = 1000,
              lam: float = 0.1, aggregate: str = "best", padding: str = "nearest",
              config: Optional[SiglConfig] = None) -> list:
    """All requested methods on one freshly sampled dataset."""
    sizes = dataset_sizes(offset, num_graphs)
    graphs = make_dataset(spec, sizes, seed, trial)
    out = []
    for m in methods:
        if m == SIGL:
            out.append(run_sigl(spec, graphs, seed, trial, window, R, config))
        else:
            out.append(run_baseline(m, spec, graphs, window, R, lam, aggregate, padding))
    return out


def median_by(rows: Sequence[ResultRow], key, value="gw_error") -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(getattr(r, value))
    return {k: float(np.median(v)) for k, v in groups.items()}


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def count_inversions(values: Sequence[float]) -> int:
    """Adjacent increases in a sequence that should not increase."""
    return int(sum(b > a for a, b in zip(values, values[1:])))
