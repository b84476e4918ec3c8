"""Linear + CIN + deep-branch predictor over field embeddings.

    y_hat = sigmoid(w_lin . a + w_dnn . x_dnn + w_cin . p+ + b)

``a`` is the one-hot raw input, so the linear term is a per-field scalar
lookup.  The gate sits either on the concatenated field embeddings (default)
or on the joint head input ``[p+, x_dnn]``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..gate import Gate
from ..numcore import RngStream, Tensor, glorot
from ..numcore import ops
from .base import MLP, GatedModel
from .cin import CIN
from .embedding import FieldEmbeddingTable

GATE_SITES = ("embedding", "head", "none")


class IntegratedPredictor(GatedModel):
    def __init__(self, vocab_sizes: Sequence[int], rng: RngStream, embed_dim: int = 8,
                 cin_widths: Sequence[int] = (16, 16), cin_lowrank: int | None = None,
                 dnn_hidden: Sequence[int] = (64, 32), dropout: float = 0.0,
                 gate_at: str = "embedding", use_linear: bool = True, use_cin: bool = True,
                 use_dnn: bool = True, gate_init: float = 2.0, gate_init_std: float = 0.01,
                 gamma: float = -0.1, zeta: float = 1.1, pi: float = 0.5):
        if gate_at not in GATE_SITES:
            raise ValueError(f"gate_at must be one of {GATE_SITES}, got {gate_at!r}")
        if not (use_linear or use_cin or use_dnn):
            raise ValueError("at least one branch must be enabled")
        self.gate_at = gate_at
        self.embed = FieldEmbeddingTable(vocab_sizes, embed_dim, rng.derive("embed"))
        m, D = self.embed.m, self.embed.dim
        self.linear = (Tensor(np.zeros((sum(self.embed.vocab_sizes), 1)), requires_grad=True)
                       if use_linear else None)
        self.cin = CIN(m, cin_widths, rng.derive("cin"), lowrank=cin_lowrank) if use_cin else None
        self.w_cin = glorot(rng.derive("w_cin"), self.cin.out_dim, 1) if use_cin else None
        self.dnn = MLP(m * D, dnn_hidden, rng.derive("dnn"), dropout) if use_dnn else None
        self.w_dnn = glorot(rng.derive("w_dnn"), self.dnn.out_dim, 1) if use_dnn else None
        self.b = Tensor(np.zeros(1), requires_grad=True)

        gate_dim = {"embedding": m * D, "head": self.head_dim, "none": 0}[gate_at]
        self.gate = (Gate(gate_dim, rng.derive("gate"), gate_init, gate_init_std, gamma, zeta, pi)
                     if gate_dim else None)

    @property
    def m(self) -> int:
        return self.embed.m

    @property
    def head_dim(self) -> int:
        return (self.cin.out_dim if self.cin else 0) + (self.dnn.out_dim if self.dnn else 0)

    def field_of_gate_dim(self) -> np.ndarray:
        """Field id of every gated dimension (embedding-site gates only)."""
        return np.repeat(np.arange(self.m), self.embed.dim)

    def forward(self, rows, training=False, tau=1.0, gate_rng=None, dropout_rng=None, hook=None):
        rows = np.asarray(rows)
        X0 = self.embed(rows)
        B, m, D = X0.shape
        e = self._hooked(ops.reshape(X0, (B, m * D)), hook)
        if self.gate_at == "embedding":
            e = self._gate(e, training, tau, gate_rng)
        X0 = ops.reshape(e, (B, m, D))

        logit = self.b
        if self.linear is not None:
            lin = ops.gather_rows(self.linear, self.embed.global_index(rows))
            logit = logit + ops.sum(lin, axis=(1, 2))

        parts, weights = [], []
        if self.cin is not None:
            parts.append(self.cin(X0))
            weights.append(self.w_cin)
        if self.dnn is not None:
            parts.append(self.dnn(e, training, dropout_rng))
            weights.append(self.w_dnn)
        if self.gate_at == "head":
            h = self._gate(ops.concat(parts, axis=-1), training, tau, gate_rng)
            w = weights[0] if len(weights) == 1 else ops.concat(weights, axis=0)
            logit = logit + ops.reshape(h @ w, (B,))
        else:
            for p, w in zip(parts, weights):
                logit = logit + ops.reshape(p @ w, (B,))
        return ops.sigmoid(logit)
