"""Step 1: learn node latents with a GCN tied to an auxiliary graphon INR.

For every observed graph A_t the encoder scores the nodes from frozen random
features X_t, the scores are min-max normalized into latents eta_t, and the
auxiliary INR h must reproduce A_t from the pairs (eta_i, eta_j).  Training
minimizes (1/n_t^2) sum_ij (A_t(i,j) - clamp(h(eta_i, eta_j)))^2 with one Adam
step per graph.  The gradient flows through h into eta and on into the GCN.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .errors import ModelFormatError, SiglInputError
from .graphons import SampledGraph
from .kernels import pair_inr_loss
from .nn import SCHEMA_VERSION, GcnEncoder, SirenInr, minmax_normalize
from .rng import derive_seed, stream

# stream addresses under the master seed
_KEY_FEATURES = 11
_KEY_ENCODER = 12
_KEY_AUX = 13


@dataclass
class SortingConfig:
    epochs: int = 100
    lr: float = 0.01
    feature_dim: int = 16
    hidden: int = 16
    num_layers: int = 3
    aux_widths: tuple = (20, 20)
    omega0: float = 10.0

    def __post_init__(self):
        if self.epochs < 0 or self.lr <= 0:
            raise SiglInputError("SortingConfig needs epochs >= 0 and lr > 0")
        self.aux_widths = tuple(int(w) for w in self.aux_widths)


@dataclass(frozen=True, eq=False)
class NodeOrdering:
    """Latents and the permutation that lists nodes by non-increasing latent.

    ``permutation[i]`` is the 0-based original index of the node placed at
    position i.
    """

    latents: np.ndarray
    permutation: np.ndarray


@dataclass(eq=False)
class SortingModel:
    encoder: GcnEncoder
    aux_graphon: SirenInr
    config: SortingConfig
    seed: int = 0
    feature_seeds: list = field(default_factory=list)
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.aux_graphon.input_dim != 2:
            raise SiglInputError("the auxiliary graphon must take 2 inputs")

    def to_dict(self) -> dict[str, Any]:
        cfg = asdict(self.config)
        cfg["aux_widths"] = list(cfg["aux_widths"])
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "sorting_model",
            "seed": int(self.seed),
            "config": cfg,
            "feature_seeds": [int(s) for s in self.feature_seeds],
            "encoder": self.encoder.to_dict(),
            "aux_graphon": self.aux_graphon.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SortingModel":
        if not isinstance(doc, dict):
            raise ModelFormatError("sorting_model document must be a JSON object")
        found = doc.get("schema_version")
        if found != SCHEMA_VERSION:
            raise ModelFormatError(
                f"sorting_model document schema_version mismatch: expected {SCHEMA_VERSION}, found {found!r}")
        try:
            return cls(GcnEncoder.from_dict(doc["encoder"]), SirenInr.from_dict(doc["aux_graphon"]),
                       SortingConfig(**doc["config"]), int(doc["seed"]),
                       [int(s) for s in doc["feature_seeds"]])
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"malformed sorting_model document: {exc}") from exc


def node_features(n: int, dim: int, feature_seed: int) -> np.ndarray:
    """Frozen N(0, 1) node features for one graph."""
    return stream(feature_seed).standard_normal((n, dim))


def _pair_loss_fused(eta: ad.Tensor, adj: np.ndarray, aux: SirenInr, params) -> ad.Tensor:
    W0, b0, W1, b1, W2, b2 = params
    loss, g_eta, gW0, gb0, gW1, gb1, gw2, gb2 = pair_inr_loss(
        eta.value, adj, W0.value, b0.value, W1.value, b1.value, W2.value[0], b2.value[0], aux.omega0)

    def vjp(g):
        g = float(g)
        return (g * g_eta, g * gW0, g * gb0, g * gW1, g * gb1, g * gw2[None, :], np.array([g * gb2]))

    return ad.custom(np.asarray(loss), (eta,) + tuple(params), vjp)


def _pair_loss_tape(eta: ad.Tensor, adj: np.ndarray, aux: SirenInr, params) -> ad.Tensor:
    n = eta.shape[0]
    pred = ad.clamp(aux.forward_tape(ad.pair_grid(eta), params))
    target = np.asarray(adj, dtype=np.float64).reshape(n * n, 1)
    return ad.scale(ad.sum(ad.square(ad.sub(target, pred))), 1.0 / (n * n))


def graph_loss(eta: ad.Tensor, adj: np.ndarray, aux: SirenInr, params) -> ad.Tensor:
    """(1/n^2) sum_ij (A_ij - clamp(h(eta_i, eta_j)))^2 on the tape.

    Two-hidden-layer networks use the fused kernel; other depths fall back to
    the generic tape over all n^2 pairs.
    """
    if len(aux.layer_widths) == 2:
        return _pair_loss_fused(eta, adj, aux, params)
    return _pair_loss_tape(eta, adj, aux, params)


def _check_dataset(graphs: Sequence[SampledGraph]) -> None:
    if len(graphs) == 0:
        raise SiglInputError("training needs at least one graph")
    for t, g in enumerate(graphs):
        if g.n < 2:
            raise SiglInputError(f"graph {t} has fewer than 2 nodes")


def train_sorting(graphs: Sequence[SampledGraph], config: Optional[SortingConfig] = None,
                  seed: int = 0) -> SortingModel:
    """Jointly fit the encoder and the auxiliary INR; returns the trained pair."""
    _check_dataset(graphs)
    config = config or SortingConfig()
    encoder = GcnEncoder(config.feature_dim, config.hidden, config.num_layers,
                         seed=derive_seed(seed, _KEY_ENCODER))
    aux = SirenInr(2, config.aux_widths, config.omega0, seed=derive_seed(seed, _KEY_AUX))
    feature_seeds = [derive_seed(seed, _KEY_FEATURES, t) for t in range(len(graphs))]
    feats = [node_features(g.n, config.feature_dim, s) for g, s in zip(graphs, feature_seeds)]
    adjs = [np.ascontiguousarray(g.adjacency) for g in graphs]

    enc_params = [ad.Tensor(p, requires_grad=True) for p in encoder.parameters()]
    aux_params = [ad.Tensor(p, requires_grad=True) for p in aux.parameters()]
    opt = ad.Adam(enc_params + aux_params, lr=config.lr)
    history = []
    for _ in range(config.epochs):
        total = 0.0
        for adj, x in zip(adjs, feats):
            opt.zero_grad()
            scores = encoder.forward_tape(adj, x, enc_params)
            eta = ad.minmax_normalize(scores)
            loss = graph_loss(eta, adj, aux, aux_params)
            ad.backward(loss)
            opt.step()
            total += float(loss.value)
        history.append(total)
    # Adam updated the tensors' arrays in place; hand them back to the models
    encoder.set_parameters([p.value for p in enc_params])
    aux.set_parameters([p.value for p in aux_params])
    return SortingModel(encoder, aux, config, int(seed), feature_seeds, history)


def dataset_loss(model: SortingModel, graphs: Sequence[SampledGraph]) -> float:
    """Step-1 objective summed over ``graphs`` using the model's stored features."""
    total = 0.0
    for t, g in enumerate(graphs):
        eta = ad.Tensor(infer_latents(model, g, feature_seed=model.feature_seeds[t]))
        total += float(graph_loss(eta, g.adjacency, model.aux_graphon,
                                  [ad.Tensor(p) for p in model.aux_graphon.parameters()]).value)
    return total


def infer_latents(model: SortingModel, graph: SampledGraph, feature_seed: Optional[int] = None,
                  features: Optional[np.ndarray] = None) -> np.ndarray:
    """eta_hat = minmax(gcn(A, X)) in [0, 1].

    ``features`` overrides X.  Otherwise X is drawn from ``feature_seed``,
    defaulting to a stream derived from the model seed and the graph seed.
    """
    if features is None:
        if feature_seed is None:
            feature_seed = derive_seed(model.seed, _KEY_FEATURES, 1 << 20, graph.seed & ((1 << 63) - 1))
        features = node_features(graph.n, model.encoder.feature_dim, feature_seed)
    return minmax_normalize(model.encoder.forward(graph.adjacency, features))


def sort_graph(graph: SampledGraph, latents) -> tuple[np.ndarray, NodeOrdering]:
    """Reorder nodes by non-increasing latent, ties by ascending original index."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.shape != (graph.n,):
        raise SiglInputError(f"need {graph.n} latents, got shape {latents.shape}")
    perm = np.argsort(-latents, kind="stable")
    adj = graph.adjacency[np.ix_(perm, perm)]
    return adj, NodeOrdering(latents, perm)


def sort_dataset(model: SortingModel, graphs: Sequence[SampledGraph],
                 training_features: bool = True) -> list[tuple[np.ndarray, NodeOrdering]]:
    """Sort every graph; graph t uses its training features when available."""
    out = []
    for t, g in enumerate(graphs):
        fs = model.feature_seeds[t] if training_features and t < len(model.feature_seeds) else None
        out.append(sort_graph(g, infer_latents(model, g, feature_seed=fs)))
    return out
