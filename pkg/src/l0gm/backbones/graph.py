"""Full-batch GCN and GraphSAGE (mean aggregator) node classifiers.

Message-passing layers use ReLU and no bias; a linear head maps the final
node representations to class log-probabilities.  The gate sits on the final
node representations (default) or on the raw node attributes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..gate import Gate
from ..numcore import Linear, RngStream, Tensor, glorot
from ..numcore import ops
from .base import MULTICLASS, GatedModel


@dataclass
class GraphSpec:
    n: int
    edges: np.ndarray  # (E, 2) undirected pairs
    features: np.ndarray  # (n, F)
    labels: np.ndarray | None = None
    masks: dict = field(default_factory=dict)  # split name -> boolean node mask
    _ops: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.shape[0] != self.n:
            raise ValueError(f"features have {self.features.shape[0]} rows for {self.n} nodes")
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= self.n):
            bad = self.edges[(self.edges < 0).any(1) | (self.edges >= self.n).any(1)][0]
            raise ValueError(f"edge {tuple(int(v) for v in bad)} references a node outside [0, {self.n})")

    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency without self-loops."""
        A = np.zeros((self.n, self.n))
        if self.edges.size:
            A[self.edges[:, 0], self.edges[:, 1]] = 1.0
            A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        np.fill_diagonal(A, 0.0)
        return A

    def with_features(self, features: np.ndarray) -> "GraphSpec":
        """Same graph, new node features (structure operators are shared)."""
        out = GraphSpec(self.n, self.edges, features, self.labels, self.masks)
        out._ops = self._ops
        return out

    def operator(self, variant: str) -> np.ndarray:
        if variant not in self._ops:
            self._ops[variant] = normalized_adjacency(self) if variant == "gcn" else mean_aggregator(self)
        return self._ops[variant]


def normalized_adjacency(g: GraphSpec) -> np.ndarray:
    """``D~^{-1/2} (A + I) D~^{-1/2}`` with exactly one self-loop per node."""
    A = g.adjacency() + np.eye(g.n)
    d = A.sum(axis=1)
    inv = 1.0 / np.sqrt(d)
    return A * inv[:, None] * inv[None, :]


def mean_aggregator(g: GraphSpec) -> np.ndarray:
    """Row-stochastic neighbour-mean operator; isolated nodes get an all-zero row."""
    A = g.adjacency()
    deg = A.sum(axis=1, keepdims=True)
    return np.divide(A, deg, out=np.zeros_like(A), where=deg > 0)


def gcn_layer(A_hat: np.ndarray, H: Tensor, W: Tensor, activation=ops.relu) -> Tensor:
    out = Tensor(A_hat) @ (ops.as_tensor(H) @ W)
    return activation(out) if activation is not None else out


def sage_layer(M: np.ndarray, H: Tensor, W: Tensor, activation=ops.relu) -> Tensor:
    """``h_v' = act(W [h_v || mean_{u in N(v)} h_u])`` in row-major form."""
    H = ops.as_tensor(H)
    out = ops.concat([H, Tensor(M) @ H], axis=-1) @ W
    return activation(out) if activation is not None else out


class GraphClassifier(GatedModel):
    task = MULTICLASS

    def __init__(self, in_dim: int, hidden: Sequence[int], n_classes: int, rng: RngStream,
                 variant: str = "gcn", gate_at: str = "final", gate_init: float = 2.0,
                 gate_init_std: float = 0.01, gamma: float = -0.1, zeta: float = 1.1, pi: float = 0.5):
        if variant not in ("gcn", "sage"):
            raise ValueError(f"variant must be 'gcn' or 'sage', got {variant!r}")
        if gate_at not in ("final", "input", "none"):
            raise ValueError(f"gate_at must be 'final', 'input' or 'none', got {gate_at!r}")
        if not hidden:
            raise ValueError("need at least one message-passing layer")
        self.variant = variant
        self.gate_at = gate_at
        self.layers = []
        fan_in = in_dim
        for i, width in enumerate(hidden):
            rows = 2 * fan_in if variant == "sage" else fan_in
            self.layers.append(glorot(rng.derive("layer", i), rows, width))
            fan_in = width
        self.head = Linear(fan_in, n_classes, rng.derive("head"))
        gate_dim = {"final": fan_in, "input": in_dim, "none": 0}[gate_at]
        self.gate = (Gate(gate_dim, rng.derive("gate"), gate_init, gate_init_std, gamma, zeta, pi)
                     if gate_dim else None)

    def represent(self, g: GraphSpec, X: Tensor) -> Tensor:
        op = g.operator(self.variant)
        layer = gcn_layer if self.variant == "gcn" else sage_layer
        H = X
        for W in self.layers:
            H = layer(op, H, W)
        return H

    def forward(self, g, training=False, tau=1.0, gate_rng=None, dropout_rng=None, hook=None):
        """Log-probabilities for every node, or for ``idx`` when given ``(graph, idx)``."""
        g, idx = g if isinstance(g, tuple) else (g, None)
        X = Tensor(g.features)
        if self.gate_at == "input":
            X = self._gate(self._hooked(X, hook), training, tau, gate_rng)
            H = self.represent(g, X)
        else:
            H = self.represent(g, X)
            if self.gate_at == "final" or hook is not None:
                H = self._gate(self._hooked(H, hook), training, tau, gate_rng)
        out = ops.log_softmax(self.head(H), axis=-1)
        return out if idx is None else ops.gather_rows(out, np.asarray(idx))


def gcn_forward(g: GraphSpec, model: GraphClassifier, training: bool = False, **kw) -> np.ndarray:
    """Per-node class probabilities from a GCN classifier."""
    if model.variant != "gcn":
        raise ValueError("gcn_forward needs a 'gcn' classifier")
    return np.exp(model.forward(g, training=training, **kw).data)


def sage_forward(g: GraphSpec, model: GraphClassifier, training: bool = False, **kw) -> np.ndarray:
    if model.variant != "sage":
        raise ValueError("sage_forward needs a 'sage' classifier")
    return np.exp(model.forward(g, training=training, **kw).data)
