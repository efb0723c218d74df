"""Graphon definitions, grid discretization and W-random graph sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Optional

import numpy as np

from .errors import SiglInputError
from .rng import stream

if TYPE_CHECKING:
    from .nn import SirenInr

CATALOG_IDS = tuple(range(1, 14))

# Lipschitz constants, |w(a,b) - w(c,d)| <= L (|a-c| + |b-d|), for the catalog
# entries where a finite constant is known in closed form.
LIPSCHITZ = {1: 1.0, 4: 0.5, 10: 1.0, 11: 1.0}


def _catalog(gid: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # every expression is written so that swapping x and y is bit-exact
    if gid == 1:
        return x * y
    if gid == 2:
        return np.exp(-(x ** 0.7 + y ** 0.7))
    if gid == 3:
        return 0.25 * ((x * x + y * y) + (np.sqrt(x) + np.sqrt(y)))
    if gid == 4:
        return 0.5 * (x + y)
    if gid == 5:
        return 1.0 / (1.0 + np.exp(-2.0 * (x * x + y * y)))
    if gid == 6:
        hi, lo = np.maximum(x, y), np.minimum(x, y)
        return 1.0 / (1.0 + np.exp(-hi ** 2 - lo ** 4))
    if gid == 7:
        return np.exp(-np.maximum(x, y) ** 0.75)
    if gid == 8:
        return np.exp(-0.5 * (np.minimum(x, y) + (np.sqrt(x) + np.sqrt(y))))
    if gid == 9:
        return np.log1p(np.maximum(x, y))
    if gid == 10:
        return np.abs(x - y)
    if gid == 11:
        return 1.0 - np.abs(x - y)
    if gid in (12, 13):
        same = (x <= 0.5) == (y <= 0.5)
        if gid == 13:
            same = ~same
        return np.where(same, 0.8, 0.0)
    raise SiglInputError(f"unknown catalog graphon id {gid}; expected 1..13")


class Graphon:
    """Base class: a symmetric function [0,1]^2 -> [0,1], vectorized over arrays."""

    variant = "abstract"

    def values(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.values(x, y)

    def to_dict(self) -> dict[str, Any]:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class Synthetic(Graphon):
    id: int
    variant = "synthetic"

    def __post_init__(self):
        if int(self.id) not in CATALOG_IDS:
            raise SiglInputError(f"unknown catalog graphon id {self.id}; expected 1..13")

    def values(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return _catalog(int(self.id), x, y)

    def to_dict(self):
        return {"variant": self.variant, "id": int(self.id)}


@dataclass(frozen=True)
class ParametricMono(Graphon):
    """exp(-alpha (x^0.7 + y^0.7)); alpha = 1 is catalog entry 2."""

    alpha: float
    variant = "parametric_mono"

    def __post_init__(self):
        if not self.alpha > 0:
            raise SiglInputError("ParametricMono requires alpha > 0")

    def values(self, x, y):
        return np.exp(-self.alpha * (x ** 0.7 + y ** 0.7))

    def to_dict(self):
        return {"variant": self.variant, "alpha": float(self.alpha)}


@dataclass(frozen=True)
class ParametricSbm(Graphon):
    """Two-block SBM: q everywhere, p1 on [0,alpha]^2, p2 on (1-alpha,1]^2."""

    alpha: float
    p1: float = 0.8
    p2: float = 0.8
    q: float = 0.1
    variant = "parametric_sbm"

    def __post_init__(self):
        if not 0 < self.alpha <= 0.5:
            raise SiglInputError("ParametricSbm requires alpha in (0, 0.5]")
        for name in ("p1", "p2", "q"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SiglInputError(f"ParametricSbm {name} must be a probability")

    def values(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        out = np.full(x.shape, self.q, dtype=np.float64)
        lo = (x <= self.alpha) & (y <= self.alpha)
        hi = (x > 1.0 - self.alpha) & (y > 1.0 - self.alpha)
        out[lo] = self.p1
        out[hi] = self.p2
        return out

    def to_dict(self):
        return {"variant": self.variant, "alpha": float(self.alpha), "p1": float(self.p1),
                "p2": float(self.p2), "q": float(self.q)}


@dataclass(frozen=True)
class Constant(Graphon):
    p: float
    variant = "constant"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise SiglInputError("Constant graphon value must lie in [0, 1]")

    def values(self, x, y):
        return np.full(np.broadcast(x, y).shape, float(self.p))

    def to_dict(self):
        return {"variant": self.variant, "p": float(self.p)}


@dataclass(frozen=True, eq=False)
class Learned(Graphon):
    """A trained INR read as a graphon: clamp(0.5 (f(x,y) + f(y,x)), 0, 1).

    For a 3-input (family) network ``z`` fixes the third coordinate.
    """

    model: "SirenInr"
    z: Optional[float] = None
    variant = "learned"

    def __post_init__(self):
        if self.model.input_dim == 3 and self.z is None:
            raise SiglInputError("a 3-input INR needs the family coordinate z")
        if self.model.input_dim == 2 and self.z is not None:
            raise SiglInputError("z is only meaningful for a 3-input INR")

    def values(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        return self.model.symmetric_eval(x.ravel(), y.ravel(), self.z).reshape(shape)

    def to_dict(self):
        return {"variant": self.variant, "z": None if self.z is None else float(self.z),
                "model": self.model.to_dict()}


@dataclass(frozen=True, eq=False)
class Mixture(Graphon):
    lam: float
    left: Graphon
    right: Graphon
    variant = "mixture"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise SiglInputError("mixture weight lambda must lie in [0, 1]")

    def values(self, x, y):
        return self.lam * self.left.values(x, y) + (1.0 - self.lam) * self.right.values(x, y)

    def to_dict(self):
        return {"variant": self.variant, "lambda": float(self.lam),
                "left": self.left.to_dict(), "right": self.right.to_dict()}


def graphon_from_dict(doc: dict[str, Any]) -> Graphon:
    variant = doc.get("variant")
    if variant == "synthetic":
        return Synthetic(int(doc["id"]))
    if variant == "parametric_mono":
        return ParametricMono(float(doc["alpha"]))
    if variant == "parametric_sbm":
        return ParametricSbm(float(doc["alpha"]), float(doc.get("p1", 0.8)),
                             float(doc.get("p2", 0.8)), float(doc.get("q", 0.1)))
    if variant == "constant":
        return Constant(float(doc["p"]))
    if variant == "mixture":
        return Mixture(float(doc["lambda"]), graphon_from_dict(doc["left"]),
                       graphon_from_dict(doc["right"]))
    if variant == "learned":
        from .nn import SirenInr

        z = doc.get("z")
        return Learned(SirenInr.from_dict(doc["model"]), None if z is None else float(z))
    raise SiglInputError(f"unknown graphon variant {variant!r}")


def eval_graphon(spec: Graphon, x: float, y: float) -> float:
    """Scalar evaluation with domain checking."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise SiglInputError(f"graphon arguments must lie in [0,1], got ({x}, {y})")
    return float(spec(x, y))


@dataclass(frozen=True, eq=False)
class GraphonGrid:
    values: np.ndarray
    resolution: int

    def __post_init__(self):
        if self.values.shape != (self.resolution, self.resolution):
            raise SiglInputError("grid values must be resolution x resolution")


def discretize(spec: Graphon, r: int) -> GraphonGrid:
    """Grid of spec at (i/r, j/r), i, j = 1..r."""
    if r < 1:
        raise SiglInputError("resolution must be >= 1")
    pts = np.arange(1, r + 1, dtype=np.float64) / r
    return GraphonGrid(spec(pts[:, None], pts[None, :]), r)


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """Binary symmetric adjacency (uint8, zero diagonal) plus hidden latents."""

    adjacency: np.ndarray
    latents: Optional[np.ndarray]
    seed: int

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def density(self) -> float:
        n = self.n
        return float(self.adjacency.sum(dtype=np.int64)) / (n * (n - 1))


def sample_graph(spec: Graphon, n: int, seed: int) -> SampledGraph:
    """Draw eta_i ~ U[0,1] and A_ij ~ Bernoulli(spec(eta_i, eta_j)) for i < j."""
    if n < 2:
        raise SiglInputError("graph size must be >= 2")
    rng = stream(seed)
    eta = rng.random(n)
    iu, ju = np.triu_indices(n, 1)
    p = spec(eta[iu], eta[ju])
    edges = rng.random(iu.size) < p
    adj = np.zeros((n, n), dtype=np.uint8)
    adj[iu[edges], ju[edges]] = 1
    adj[ju[edges], iu[edges]] = 1
    return SampledGraph(adj, eta, int(seed))


def write_edge_list(graph: SampledGraph, path) -> None:
    iu, ju = np.nonzero(np.triu(graph.adjacency, 1))
    with open(path, "w") as fh:
        fh.write(f"n={graph.n} seed={graph.seed}\n")
        for i, j in zip(iu.tolist(), ju.tolist()):
            fh.write(f"{i} {j}\n")


def read_edge_list(path) -> SampledGraph:
    with open(path) as fh:
        header = fh.readline().split()
        try:
            fields = dict(tok.split("=", 1) for tok in header)
            n, seed = int(fields["n"]), int(fields["seed"])
        except (ValueError, KeyError) as exc:
            raise SiglInputError(f"{path}: malformed edge-list header {header!r}") from exc
        adj = np.zeros((n, n), dtype=np.uint8)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            i, j = (int(tok) for tok in line.split())
            if not (0 <= i < j < n):
                raise SiglInputError(f"{path}:{lineno}: edge ({i}, {j}) violates 0 <= i < j < n")
            adj[i, j] = adj[j, i] = 1
    return SampledGraph(adj, None, seed)
