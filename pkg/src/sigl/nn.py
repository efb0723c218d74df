"""Sine-activated coordinate network (SIREN) and the mean-aggregation GCN.

Both models keep their parameters as plain float64 arrays.  ``forward`` is a
plain numpy evaluation; ``forward_tape`` threads the same computation through
:mod:`sigl.autodiff` given leaf tensors for the parameters, so training code
owns the tape and the optimizer.
"""

from __future__ import annotations

import json
from typing import Any, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .errors import ModelFormatError, SiglInputError

SCHEMA_VERSION = 1


def _check_version(doc: dict, kind: str) -> None:
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{kind} document must be a JSON object")
    found = doc.get("schema_version")
    if found != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{kind} document schema_version mismatch: expected {SCHEMA_VERSION}, found {found!r}")
    if doc.get("kind") != kind:
        raise ModelFormatError(f"expected a {kind} document, found kind {doc.get('kind')!r}")


def _encode(a: np.ndarray) -> dict[str, Any]:
    # json writes floats with repr(), which round-trips float64 exactly
    return {"shape": list(a.shape), "data": [float(v) for v in np.ravel(a)]}


def _decode(doc: dict, what: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in doc["shape"])
        data = np.array(doc["data"], dtype=np.float64)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed array for {what}: {exc}") from exc


def minmax_normalize(scores) -> np.ndarray:
    """(s - min s) / (max s - min s); a constant vector maps to all 0.5."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise SiglInputError("minmax_normalize expects a non-empty vector")
    lo, hi = s.min(), s.max()
    if hi <= lo:
        return np.full(s.shape, 0.5)
    return (s - lo) / (hi - lo)


class SirenInr:
    """MLP with hidden layers sin(omega0 (W x + b)) and an affine scalar head.

    ``layer_widths`` lists the hidden widths; ``weights[i]`` has shape
    (out, in) and ``biases[i]`` shape (out,), the last pair being the head.
    """

    def __init__(self, input_dim: int = 2, layer_widths: Sequence[int] = (20, 20),
                 omega0: float = 10.0, weights=None, biases=None, seed: Optional[int] = None):
        if input_dim not in (2, 3):
            raise SiglInputError(f"SirenInr input_dim must be 2 or 3, got {input_dim}")
        if len(layer_widths) < 1 or any(int(w) < 1 for w in layer_widths):
            raise SiglInputError("SirenInr needs at least one hidden layer of positive width")
        self.input_dim = int(input_dim)
        self.layer_widths = [int(w) for w in layer_widths]
        self.omega0 = float(omega0)
        dims = [self.input_dim] + self.layer_widths + [1]
        if weights is None:
            weights, biases = self._init(dims, seed)
        if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
            raise SiglInputError("SirenInr: wrong number of layers for the declared widths")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise SiglInputError(f"SirenInr layer {i}: shapes {w.shape}, {b.shape} do not match widths")

    def _init(self, dims, seed):
        from .rng import stream

        rng = stream(0 if seed is None else seed, 1)
        weights, biases = [], []
        for i in range(len(dims) - 1):
            fan_in = dims[i]
            bound = 1.0 / fan_in if i == 0 else np.sqrt(6.0 / fan_in) / self.omega0
            weights.append(rng.uniform(-bound, bound, (dims[i + 1], fan_in)))
            biases.append(rng.uniform(-1.0, 1.0, dims[i + 1]) / np.sqrt(fan_in))
        return weights, biases

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        for i in range(len(self.weights)):
            self.weights[i] = np.array(params[2 * i], dtype=np.float64)
            self.biases[i] = np.array(params[2 * i + 1], dtype=np.float64)

    def copy(self) -> "SirenInr":
        return SirenInr(self.input_dim, self.layer_widths, self.omega0,
                        [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def _check_coords(self, coords) -> np.ndarray:
        x = np.asarray(coords, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise SiglInputError(f"expected coordinates of shape (batch, {self.input_dim}), got {x.shape}")
        return x

    def forward(self, coords) -> np.ndarray:
        """Raw (unclamped) outputs for a (batch, input_dim) array."""
        h = self._check_coords(coords)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.sin(self.omega0 * (h @ w.T + b))
        return h @ self.weights[-1][0] + self.biases[-1][0]

    def forward_tape(self, coords, params: Sequence[ad.Tensor]) -> ad.Tensor:
        """Same as ``forward`` on the tape; ``params`` follows ``parameters()`` order.

        Returns a (batch, 1) tensor.
        """
        h = coords if isinstance(coords, ad.Tensor) else ad.Tensor(self._check_coords(coords))
        if h.value.ndim != 2 or h.shape[1] != self.input_dim:
            raise SiglInputError(f"expected coordinates of shape (batch, {self.input_dim}), got {h.shape}")
        nl = len(self.weights)
        for i in range(nl):
            w, b = params[2 * i], params[2 * i + 1]
            h = ad.add(ad.matmul(h, _transpose(w)), b)
            if i < nl - 1:
                h = ad.sin(ad.scale(h, self.omega0))
        return h

    def symmetric_eval(self, x, y, z: Optional[float] = None) -> np.ndarray:
        """clamp(0.5 (f(x, y[, z]) + f(y, x[, z])), 0, 1) for equal-length vectors."""
        x = np.asarray(x, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if self.input_dim == 3:
            if z is None:
                raise SiglInputError("a 3-input INR needs the family coordinate z")
            zc = np.full(x.size, float(z))
            a = self.forward(np.stack([x, y, zc], axis=1))
            b = self.forward(np.stack([y, x, zc], axis=1))
        else:
            a = self.forward(np.stack([x, y], axis=1))
            b = self.forward(np.stack([y, x], axis=1))
        # a + b is commutative in floating point, so swapping x and y is exact
        return np.clip(0.5 * (a + b), 0.0, 1.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "siren_inr",
            "input_dim": self.input_dim,
            "omega0": self.omega0,
            "layer_widths": list(self.layer_widths),
            "weights": [_encode(w) for w in self.weights],
            "biases": [_encode(b) for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SirenInr":
        _check_version(doc, "siren_inr")
        try:
            return cls(int(doc["input_dim"]), [int(w) for w in doc["layer_widths"]],
                       float(doc["omega0"]),
                       [_decode(w, "weights") for w in doc["weights"]],
                       [_decode(b, "biases") for b in doc["biases"]])
        except KeyError as exc:
            raise ModelFormatError(f"siren_inr document missing field {exc}") from exc
        except SiglInputError as exc:
            raise ModelFormatError(str(exc)) from exc


def _transpose(t: ad.Tensor) -> ad.Tensor:
    return ad.custom(t.value.T, (t,), lambda g: (g.T,))


def siren_forward(model: SirenInr, coords) -> np.ndarray:
    return model.forward(coords)


class GcnEncoder:
    """Mean-aggregation GCN producing one raw score per node.

    Layer k maps z (n, d) to ReLU([mean_nbr(z) W_k^T, z B_k^T]) P_k^T, where
    the concatenation is 2*hidden wide and P_k projects back to ``hidden``.
    A linear readout r gives the scalar score.
    """

    def __init__(self, feature_dim: int = 16, hidden: int = 16, num_layers: int = 3,
                 W=None, B=None, P=None, readout=None, seed: Optional[int] = None):
        if num_layers < 1 or feature_dim < 1 or hidden < 1:
            raise SiglInputError("GcnEncoder dimensions must be positive")
        self.feature_dim = int(feature_dim)
        self.hidden = int(hidden)
        self.num_layers = int(num_layers)
        if W is None:
            W, B, P, readout = self._init(seed)
        self.W = [np.array(w, dtype=np.float64) for w in W]
        self.B = [np.array(b, dtype=np.float64) for b in B]
        self.P = [np.array(p, dtype=np.float64) for p in P]
        self.readout = np.array(readout, dtype=np.float64).reshape(-1)
        for k in range(self.num_layers):
            d_in = self.feature_dim if k == 0 else self.hidden
            if (self.W[k].shape != (self.hidden, d_in) or self.B[k].shape != (self.hidden, d_in)
                    or self.P[k].shape != (self.hidden, 2 * self.hidden)):
                raise SiglInputError(f"GcnEncoder layer {k}: parameter shapes do not match dimensions")
        if self.readout.shape != (self.hidden,):
            raise SiglInputError("GcnEncoder readout must have length hidden")

    def _init(self, seed):
        from .rng import stream

        rng = stream(0 if seed is None else seed, 2)

        def glorot(rows, cols):
            bound = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-bound, bound, (rows, cols))

        W, B, P = [], [], []
        for k in range(self.num_layers):
            d_in = self.feature_dim if k == 0 else self.hidden
            W.append(glorot(self.hidden, d_in))
            B.append(glorot(self.hidden, d_in))
            P.append(glorot(self.hidden, 2 * self.hidden))
        return W, B, P, glorot(1, self.hidden)[0]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for k in range(self.num_layers):
            out += [self.W[k], self.B[k], self.P[k]]
        return out + [self.readout]

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        for k in range(self.num_layers):
            self.W[k], self.B[k], self.P[k] = (np.array(p, dtype=np.float64) for p in params[3 * k:3 * k + 3])
        self.readout = np.array(params[-1], dtype=np.float64)

    def copy(self) -> "GcnEncoder":
        return GcnEncoder(self.feature_dim, self.hidden, self.num_layers,
                          [w.copy() for w in self.W], [b.copy() for b in self.B],
                          [p.copy() for p in self.P], self.readout.copy())

    def _check(self, adjacency, features):
        adj = np.asarray(adjacency, dtype=np.float64)
        x = np.asarray(features, dtype=np.float64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise SiglInputError(f"adjacency must be square, got {adj.shape}")
        if x.ndim != 2 or x.shape != (adj.shape[0], self.feature_dim):
            raise SiglInputError(f"features must be ({adj.shape[0]}, {self.feature_dim}), got {x.shape}")
        return adj, x

    def forward(self, adjacency, features) -> np.ndarray:
        adj, z = self._check(adjacency, features)
        deg = adj.sum(axis=1)
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)[:, None]
        for k in range(self.num_layers):
            h = np.concatenate([((adj @ z) * inv) @ self.W[k].T, z @ self.B[k].T], axis=1)
            z = np.maximum(h, 0.0) @ self.P[k].T
        return z @ self.readout

    def forward_tape(self, adjacency, features, params: Sequence[ad.Tensor]) -> ad.Tensor:
        """Scores as an (n,) tensor; ``params`` follows ``parameters()`` order."""
        adj, x = self._check(adjacency, features)
        z = ad.Tensor(x)
        for k in range(self.num_layers):
            W, B, P = params[3 * k:3 * k + 3]
            agg = ad.matmul(ad.neighbor_mean(adj, z), _transpose(W))
            own = ad.matmul(z, _transpose(B))
            z = ad.matmul(ad.relu(ad.concat(agg, own)), _transpose(P))
        r = params[-1]
        col = ad.custom(r.value[:, None], (r,), lambda g: (g[:, 0],))
        s = ad.matmul(z, col)
        return ad.custom(s.value[:, 0], (s,), lambda g: (g[:, None],))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "gcn_encoder",
            "feature_dim": self.feature_dim,
            "hidden": self.hidden,
            "num_layers": self.num_layers,
            "W": [_encode(w) for w in self.W],
            "B": [_encode(b) for b in self.B],
            "P": [_encode(p) for p in self.P],
            "readout": _encode(self.readout),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GcnEncoder":
        _check_version(doc, "gcn_encoder")
        try:
            return cls(int(doc["feature_dim"]), int(doc["hidden"]), int(doc["num_layers"]),
                       [_decode(w, "W") for w in doc["W"]], [_decode(b, "B") for b in doc["B"]],
                       [_decode(p, "P") for p in doc["P"]], _decode(doc["readout"], "readout"))
        except KeyError as exc:
            raise ModelFormatError(f"gcn_encoder document missing field {exc}") from exc
        except SiglInputError as exc:
            raise ModelFormatError(str(exc)) from exc


def gcn_forward(model: GcnEncoder, adjacency, features) -> np.ndarray:
    return model.forward(adjacency, features)


def save_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model document ({exc})") from exc
