"""Mean-pooled token-embedding classifier.

Stands in for a sequence encoder: the pooled vector plays the role of the
sentence embedding consumed by the classifier head, which is where the gate
attaches.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..gate import Gate
from ..numcore import Linear, RngStream, Tensor
from ..numcore import ops
from .base import GatedModel


def pooling_matrix(lengths: Sequence[int]) -> np.ndarray:
    """``(B, sum(lengths))`` matrix averaging each sequence's token rows."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.size and lengths.min() < 1:
        raise ValueError("every sequence needs at least one token")
    P = np.zeros((lengths.size, int(lengths.sum())))
    start = 0
    for i, n in enumerate(lengths):
        P[i, start:start + n] = 1.0 / n
        start += n
    return P


def mean_pool(table: Tensor, sequences: Sequence[np.ndarray]) -> Tensor:
    if len(sequences) == 0:
        raise ValueError("empty batch")
    lengths = [len(s) for s in sequences]
    if min(lengths) == 0:
        raise ValueError("empty token sequence")
    tokens = np.concatenate([np.asarray(s, dtype=np.int64) for s in sequences])
    return Tensor(pooling_matrix(lengths)) @ ops.gather_rows(table, tokens)


class PooledTextClassifier(GatedModel):
    def __init__(self, vocab_size: int, dim: int, rng: RngStream, gate_at: str = "pooled",
                 gate_init: float = 2.0, gate_init_std: float = 0.01,
                 gamma: float = -0.1, zeta: float = 1.1, pi: float = 0.5):
        if vocab_size < 2:
            raise ValueError("vocabulary needs at least two tokens")
        if gate_at not in ("pooled", "none"):
            raise ValueError(f"gate_at must be 'pooled' or 'none', got {gate_at!r}")
        self.vocab_size = vocab_size
        self.dim = dim
        self.gate_at = gate_at
        self.embedding = Tensor(rng.derive("embed").normal(0, 0.1, size=(vocab_size, dim)), requires_grad=True)
        self.head = Linear(dim, 1, rng.derive("head"))
        self.gate = (Gate(dim, rng.derive("gate"), gate_init, gate_init_std, gamma, zeta, pi)
                     if gate_at == "pooled" else None)

    def pooled(self, sequences) -> Tensor:
        return mean_pool(self.embedding, sequences)

    def forward(self, sequences, training=False, tau=1.0, gate_rng=None, dropout_rng=None, hook=None):
        h = self._gate(self._hooked(self.pooled(sequences), hook), training, tau, gate_rng)
        logit = self.head(h)
        return ops.sigmoid(ops.reshape(logit, (logit.shape[0],)))


def pooled_text_forward(token_ids, model: PooledTextClassifier) -> float:
    """Probability for a single token sequence (deterministic gates)."""
    return float(model.predict([np.asarray(token_ids)])[0])
