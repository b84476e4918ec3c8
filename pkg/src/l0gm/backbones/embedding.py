from __future__ import annotations

from typing import Sequence

import numpy as np

from ..numcore import Module, RngStream, Tensor
from ..numcore import ops


class FieldEmbeddingTable(Module):
    """Per-field lookup tables stored as one stacked matrix with row offsets.

    ``rows`` passed to :meth:`__call__` hold one local index per field; field
    ``j`` owns rows ``offsets[j] : offsets[j] + vocab_sizes[j]`` of ``weight``.
    """

    def __init__(self, vocab_sizes: Sequence[int], dim: int, rng: RngStream, scale: float = 0.05):
        self.vocab_sizes = [int(v) for v in vocab_sizes]
        if any(v < 1 for v in self.vocab_sizes):
            raise ValueError(f"vocabulary sizes must be positive, got {self.vocab_sizes}")
        self.dim = int(dim)
        self.offsets = np.concatenate([[0], np.cumsum(self.vocab_sizes)[:-1]]).astype(np.int64)
        self.weight = Tensor(rng.normal(0.0, scale, size=(sum(self.vocab_sizes), self.dim)),
                             requires_grad=True)

    @property
    def m(self) -> int:
        return len(self.vocab_sizes)

    def field_weights(self, j: int) -> np.ndarray:
        start = self.offsets[j]
        return self.weight.data[start:start + self.vocab_sizes[j]]

    def global_index(self, rows) -> np.ndarray:
        rows = np.asarray(rows)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} field indices per row, got {rows.shape[-1]}")
        for j, v in enumerate(self.vocab_sizes):
            col = rows[:, j]
            bad = (col < 0) | (col >= v)
            if bad.any():
                raise IndexError(f"field {j}: index {int(col[bad][0])} outside vocabulary of size {v}")
        return rows.astype(np.int64) + self.offsets

    def __call__(self, rows) -> Tensor:
        return ops.gather_rows(self.weight, self.global_index(rows))


def embed_fields(rows, table: FieldEmbeddingTable) -> Tensor:
    """Field-index batch ``(B, m)`` to the embedding stack ``X0`` of shape ``(B, m, D)``."""
    return table(rows)
