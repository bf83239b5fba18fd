"""Feedforward two-output networks and the score-averaging ensemble.

Architecture is [input, hidden..., 2] with tanh hidden units and a logistic
unit per output node.  Targets are genuine -> (1, 0), forged -> (0, 1); the
scalar match score is s = (1 + o_genuine - o_forged) / 2, in (0, 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import BadShape, DimensionMismatch, EmptyEnsemble, IoFailure

HIDDEN_ACTIVATION = "tanh"
OUTPUT_ACTIVATION = "logistic"


def _logistic(z: np.ndarray) -> np.ndarray:
    # Split by sign for overflow-free evaluation.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Network:
    """Weights and biases per layer; treat instances as immutable values."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]   # layer l: (sizes[l+1], sizes[l])
    biases: list[np.ndarray]    # layer l: (sizes[l+1],)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "hidden_activation": HIDDEN_ACTIVATION,
            "output_activation": OUTPUT_ACTIVATION,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        sizes = tuple(int(s) for s in doc["sizes"])
        _check_sizes(sizes)
        weights, biases = [], []
        for l in range(len(sizes) - 1):
            w = np.asarray(doc["weights"][l], dtype=float).reshape(sizes[l + 1], sizes[l])
            b = np.asarray(doc["biases"][l], dtype=float)
            if b.shape != (sizes[l + 1],):
                raise BadShape(f"bias vector {l} has shape {b.shape}")
            weights.append(w)
            biases.append(b)
        return cls(sizes=sizes, weights=weights, biases=biases)


def _check_sizes(sizes) -> None:
    if len(sizes) < 2:
        raise BadShape(f"need at least [input, 2], got {sizes}")
    if any(int(s) < 1 for s in sizes):
        raise BadShape(f"layer sizes must be >= 1, got {sizes}")
    if int(sizes[-1]) != 2:
        raise BadShape(f"output layer must have 2 nodes, got {sizes[-1]}")


def init_network(sizes, seed: int) -> Network:
    """Weights uniform in [-0.5, 0.5]/sqrt(fan_in), biases zero."""
    sizes = tuple(int(s) for s in sizes)
    _check_sizes(sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-0.5, 0.5, size=(fan_out, fan_in)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return Network(sizes=sizes, weights=weights, biases=biases)


def forward_pass(net: Network, x: np.ndarray) -> list[np.ndarray]:
    """All layer activations for a (B, input) batch; last entry is the output."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != net.input_dim:
        raise DimensionMismatch(
            f"input dim {x.shape[1]} does not match network input {net.input_dim}"
        )
    acts = [x]
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w.T + b
        acts.append(_logistic(z) if l == last else np.tanh(z))
    return acts


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """(o_genuine, o_forged) for one input, or a (B, 2) batch of them."""
    single = np.asarray(x).ndim == 1
    out = forward_pass(net, x)[-1]
    return out[0] if single else out


def score_from_outputs(outputs: np.ndarray) -> np.ndarray:
    """s = (1 + o_genuine - o_forged) / 2."""
    o = np.asarray(outputs)
    return (1.0 + o[..., 0] - o[..., 1]) / 2.0


def score(net: Network, x: np.ndarray) -> float:
    return float(score_from_outputs(forward(net, x)))


def scores(net: Network, x: np.ndarray) -> np.ndarray:
    return score_from_outputs(forward_pass(net, x)[-1])


# --- parameter vector view ----------------------------------------------------

def flatten_params(net: Network) -> np.ndarray:
    """Layer-by-layer [weights row-major, biases] as one vector."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def with_params(net: Network, params: np.ndarray) -> Network:
    """A new Network with the same shape and the given parameter vector."""
    if params.shape != (net.n_params,):
        raise DimensionMismatch(
            f"expected {net.n_params} parameters, got shape {params.shape}"
        )
    weights, biases, pos = [], [], 0
    for w, b in zip(net.weights, net.biases):
        weights.append(params[pos : pos + w.size].reshape(w.shape).copy())
        pos += w.size
        biases.append(params[pos : pos + b.size].copy())
        pos += b.size
    return Network(sizes=net.sizes, weights=weights, biases=biases)


def weight_entry_mask(net: Network) -> np.ndarray:
    """Boolean mask over the parameter vector: True at weights, False at biases."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ones(w.size, dtype=bool))
        parts.append(np.zeros(b.size, dtype=bool))
    return np.concatenate(parts)


# --- ensemble -----------------------------------------------------------------

@dataclass
class GlobalModel:
    """Per-partition local networks combined by score averaging."""

    locals: list[Network]

    def __post_init__(self):
        if not self.locals:
            raise EmptyEnsemble("global model needs at least one local network")
        sizes = self.locals[0].sizes
        if any(n.sizes != sizes for n in self.locals):
            raise BadShape("local networks disagree on layer sizes")

    @property
    def input_dim(self) -> int:
        return self.locals[0].input_dim

    def to_dict(self) -> dict:
        return {"members": [n.to_dict() for n in self.locals]}

    @classmethod
    def from_dict(cls, doc: dict) -> "GlobalModel":
        return cls([Network.from_dict(m) for m in doc["members"]])


def ensemble_score(model: GlobalModel, x: np.ndarray) -> float:
    """Arithmetic mean of the member scores."""
    if not model.locals:
        raise EmptyEnsemble("global model has no local networks")
    return float(np.mean([score(net, x) for net in model.locals]))


def ensemble_scores(model: GlobalModel, x: np.ndarray) -> np.ndarray:
    if not model.locals:
        raise EmptyEnsemble("global model has no local networks")
    return np.mean([scores(net, x) for net in model.locals], axis=0)


def score_any(model, x: np.ndarray) -> np.ndarray:
    """Batch scores for either a single Network or a GlobalModel."""
    if isinstance(model, GlobalModel):
        return ensemble_scores(model, x)
    return scores(model, x)


# --- model file ------------------------------------------------------------------

def model_to_doc(model) -> dict:
    """Tagged dict form of a Network or GlobalModel."""
    if isinstance(model, GlobalModel):
        return {"kind": "ensemble", **model.to_dict()}
    return {"kind": "network", **model.to_dict()}


def model_from_doc(doc: dict):
    if doc.get("kind") == "ensemble":
        return GlobalModel.from_dict(doc)
    return Network.from_dict(doc)


def save_model(model, path, trainer_meta: dict | None = None, pca_ref: str | None = None) -> None:
    """Write a Network or GlobalModel with its training metadata."""
    doc = model_to_doc(model)
    doc["trainer"] = trainer_meta
    doc["pca_ref"] = pca_ref
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path):
    """Read back (model, metadata dict) written by save_model."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    meta = {"trainer": doc.get("trainer"), "pca_ref": doc.get("pca_ref")}
    return model_from_doc(doc), meta
