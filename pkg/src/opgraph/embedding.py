"""Variational graph auto-encoder over graph encodings, written directly in numpy.

Nodes are the operators present in a graph. Each node's features are a one-hot
operator id followed by the full attribute-slot vector, where only that
operator's own slots are filled. The encoder is a two-layer GCN giving per-node
``mu`` and ``log sigma``. The decoder scores edges as ``sigmoid(z_i . z_j)`` and
a linear head reconstructs each node's attribute slots. A graph's embedding is
the mean of its node ``mu`` vectors.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import GraphEncoding

PARAM_NAMES = ("W1", "Wmu", "Wsig", "Wa")


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class VGAEConfig:
    latent_dim: int = 20
    hidden_dim: int = 64
    epochs: int = 200
    lr: float = 0.01
    attr_weight: float = 0.1
    seed: int = 0


@dataclass
class GraphTensors:
    """Per-graph inputs restricted to present nodes."""
    A_hat: np.ndarray   # normalised adjacency with self loops
    X: np.ndarray       # node features
    Y: np.ndarray       # reconstruction target (symmetric adjacency + I)
    T: np.ndarray       # attribute targets per node

    @property
    def n(self) -> int:
        return self.X.shape[0]


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class FeatureLayout:
    """Where each operator's parameters sit in the attribute vector, and their ranges."""
    offsets: tuple[tuple[int, int], ...]
    low: tuple[float, ...]
    span: tuple[float, ...]

    @classmethod
    def from_catalog(cls, catalog) -> "FeatureLayout":
        offsets, low, span, pos = [], [], [], 0
        for e in catalog:
            offsets.append((pos, pos + e.n_params))
            pos += e.n_params
            for p in e.params:
                low.append(float(p.low))
                span.append(float(p.high - p.low) or 1.0)
        return cls(tuple(offsets), tuple(low), tuple(span))

    def to_dict(self) -> dict:
        return {"offsets": [list(o) for o in self.offsets], "low": list(self.low), "span": list(self.span)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureLayout":
        return cls(tuple(tuple(o) for o in d["offsets"]), tuple(d["low"]), tuple(d["span"]))


def graph_tensors(enc: GraphEncoding, layout: FeatureLayout) -> GraphTensors:
    """Build GCN inputs; attribute slots are rescaled to [0, 1] by parameter range."""
    n_ops = enc.adjacency.shape[0]
    offsets = layout.offsets
    if len(offsets) != n_ops or len(layout.low) != enc.attributes.size:
        raise EmbeddingError(f"layout describes {len(offsets)} operators, encoding has {n_ops}")
    idx = np.flatnonzero(enc.present)
    if idx.size == 0:
        raise EmbeddingError("encoding has no present operators")
    n_attr = enc.attributes.size
    A = enc.adjacency[np.ix_(idx, idx)]
    A = np.maximum(A, A.T)
    np.fill_diagonal(A, 0.0)
    Y = A + np.eye(idx.size)
    d = Y.sum(axis=1)
    A_hat = Y / np.sqrt(np.outer(d, d))
    attrs = (enc.attributes - np.asarray(layout.low)) / np.asarray(layout.span)
    X = np.zeros((idx.size, n_ops + n_attr))
    X[np.arange(idx.size), idx] = 1.0
    for r, i in enumerate(idx):
        lo, hi = offsets[i]
        X[r, n_ops + lo:n_ops + hi] = attrs[lo:hi]
    return GraphTensors(A_hat, X, Y, X[:, n_ops:].copy())


def kl_term(mu: np.ndarray, logsig: np.ndarray) -> float:
    """KL(N(mu, sigma^2) || N(0, 1)) summed over entries; zero only at mu=0, sigma=1."""
    return float(0.5 * np.sum(mu ** 2 + np.exp(2 * logsig) - 1.0 - 2 * logsig))


def _bce_logits(logits: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, logits) - Y * logits


def forward(params: dict, g: GraphTensors, eps: np.ndarray, attr_weight: float = 0.1,
            grads: bool = False):
    """Loss for one graph with fixed noise ``eps``; returns (loss, parts, grads or None)."""
    A, X = g.A_hat, g.X
    n = g.n
    AX = A @ X
    P = AX @ params["W1"]
    H = np.maximum(P, 0.0)
    AH = A @ H
    mu = AH @ params["Wmu"]
    ls = AH @ params["Wsig"]
    sig = np.exp(ls)
    Z = mu + sig * eps
    logits = Z @ Z.T
    rec = float(np.mean(_bce_logits(logits, g.Y)))
    kl = kl_term(mu, ls) / n ** 2
    pred = Z @ params["Wa"]
    diff = pred - g.T
    att = attr_weight * float(np.sum(diff ** 2)) / n
    loss = rec + kl + att
    parts = {"reconstruction": rec, "kl": kl, "attributes": att}
    if not grads:
        return loss, parts, None
    dlog = (sigmoid(logits) - g.Y) / n ** 2
    dpred = 2 * attr_weight * diff / n
    dZ = (dlog + dlog.T) @ Z + dpred @ params["Wa"].T
    dmu = dZ + mu / n ** 2
    dls = dZ * eps * sig + (sig ** 2 - 1.0) / n ** 2
    dAH = dmu @ params["Wmu"].T + dls @ params["Wsig"].T
    dP = (A.T @ dAH) * (P > 0)
    g_ = {"W1": AX.T @ dP, "Wmu": AH.T @ dmu, "Wsig": AH.T @ dls, "Wa": Z.T @ dpred}
    return loss, parts, g_


def _glorot(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def init_params(input_dim: int, attr_dim: int, config: VGAEConfig, rng: np.random.Generator) -> dict:
    return {
        "W1": _glorot(rng, input_dim, config.hidden_dim),
        "Wmu": _glorot(rng, config.hidden_dim, config.latent_dim),
        "Wsig": 0.1 * _glorot(rng, config.hidden_dim, config.latent_dim),
        "Wa": _glorot(rng, config.latent_dim, attr_dim),
    }


@dataclass
class VGAEModel:
    params: dict
    layout: FeatureLayout
    config: VGAEConfig
    losses: list[float] = field(default_factory=list)

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    @property
    def input_dim(self) -> int:
        return self.params["W1"].shape[0]

    def node_mu(self, enc: GraphEncoding) -> np.ndarray:
        g = graph_tensors(enc, self.layout)
        if g.X.shape[1] != self.input_dim:
            raise EmbeddingError(f"feature width {g.X.shape[1]} does not match model input {self.input_dim}")
        H = np.maximum(g.A_hat @ g.X @ self.params["W1"], 0.0)
        return g.A_hat @ H @ self.params["Wmu"]

    def embed(self, enc: GraphEncoding) -> np.ndarray:
        return self.node_mu(enc).mean(axis=0)

    def decode(self, Z: np.ndarray) -> np.ndarray:
        return sigmoid(Z @ Z.T)

    def to_json(self) -> str:
        return json.dumps({
            "config": asdict(self.config),
            "layout": self.layout.to_dict(),
            "params": {k: v.tolist() for k, v in self.params.items()},
            "losses": self.losses,
        })

    @classmethod
    def from_json(cls, text: str) -> "VGAEModel":
        d = json.loads(text)
        return cls({k: np.asarray(v, dtype=float) for k, v in d["params"].items()},
                   FeatureLayout.from_dict(d["layout"]), VGAEConfig(**d["config"]), list(d["losses"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "VGAEModel":
        return cls.from_json(Path(path).read_text())


def embed(model: VGAEModel, enc: GraphEncoding) -> np.ndarray:
    return model.embed(enc)


def vgae_train(samples: Sequence[GraphEncoding], layout: FeatureLayout,
               config: VGAEConfig = VGAEConfig()) -> VGAEModel:
    """Full-batch gradient descent on the mean per-graph loss."""
    if len(samples) < 2:
        raise EmbeddingError("need at least two graphs to train")
    dims = {(s.adjacency.shape, s.attributes.shape) for s in samples}
    if len(dims) != 1:
        raise EmbeddingError("encodings come from different catalogs")
    rng = np.random.default_rng(config.seed)
    data = [graph_tensors(s, layout) for s in samples]
    params = init_params(data[0].X.shape[1], data[0].T.shape[1], config, rng)
    losses = []
    for epoch in range(config.epochs):
        total = 0.0
        acc = {k: np.zeros_like(v) for k, v in params.items()}
        for g in data:
            eps = rng.standard_normal((g.n, config.latent_dim))
            loss, _, gr = forward(params, g, eps, config.attr_weight, grads=True)
            total += loss
            for k in acc:
                acc[k] += gr[k]
        mean_loss = total / len(data)
        if not np.isfinite(mean_loss):
            raise EmbeddingError(f"loss became {mean_loss} at epoch {epoch}")
        losses.append(float(mean_loss))
        for k in params:
            params[k] -= config.lr * acc[k] / len(data)
    return VGAEModel(params, layout, config, losses)


def finite_difference_check(params: dict, g: GraphTensors, eps: np.ndarray, attr_weight: float = 0.1,
                            h: float = 1e-6) -> dict[str, float]:
    """Relative error between analytic and central-difference gradients, per weight matrix."""
    _, _, analytic = forward(params, g, eps, attr_weight, grads=True)
    out = {}
    for name in PARAM_NAMES:
        W = params[name]
        num = np.zeros_like(W)
        for i in np.ndindex(W.shape):
            old = W[i]
            W[i] = old + h
            up = forward(params, g, eps, attr_weight)[0]
            W[i] = old - h
            down = forward(params, g, eps, attr_weight)[0]
            W[i] = old
            num[i] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(num), np.linalg.norm(analytic[name]), 1e-12)
        out[name] = float(np.linalg.norm(num - analytic[name]) / denom)
    return out
