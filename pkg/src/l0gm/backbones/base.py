from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..gate import Gate
from ..numcore import Linear, Module, RngStream, Tensor, no_grad
from ..numcore import ops

BINARY = "binary"
MULTICLASS = "multiclass"

Hook = Callable[[np.ndarray], np.ndarray]


class MLP(Module):
    """ReLU hidden stack; dropout (training only) after every hidden layer."""

    def __init__(self, fan_in: int, hidden: Sequence[int], rng: RngStream, dropout: float = 0.0):
        if not 0 <= dropout < 1:
            raise ValueError(f"dropout must lie in [0, 1), got {dropout}")
        self.layers = []
        for width in hidden:
            self.layers.append(Linear(fan_in, width, rng))
            fan_in = width
        self.out_dim = fan_in
        self.dropout = dropout

    def __call__(self, x: Tensor, training: bool = False, rng: RngStream | None = None) -> Tensor:
        for layer in self.layers:
            x = ops.relu(layer(x))
            if training and self.dropout > 0:
                keep = (rng.random(x.shape) >= self.dropout) / (1.0 - self.dropout)
                x = x * keep
        return x


class GatedModel(Module):
    """Backbone with at most one gate on its classifier-facing representation.

    ``forward`` returns probabilities of the positive class for binary tasks
    and row log-probabilities for multiclass tasks.  ``hook`` perturbs the
    interface representation (values only, no gradient) before the gate.
    """

    task = BINARY
    gate: Gate | None = None

    def gates(self) -> list[Gate]:
        return [self.gate] if self.gate is not None else []

    def _gate(self, r: Tensor, training: bool, tau: float, rng: RngStream | None) -> Tensor:
        if self.gate is None:
            return r
        return self.gate(r, training, tau, rng)

    @staticmethod
    def _hooked(r: Tensor, hook: Hook | None) -> Tensor:
        return r if hook is None else Tensor(hook(r.data))

    def forward(self, batch, training: bool = False, tau: float = 1.0,
                gate_rng: RngStream | None = None, dropout_rng: RngStream | None = None,
                hook: Hook | None = None) -> Tensor:
        raise NotImplementedError

    def task_loss(self, out: Tensor, y) -> Tensor:
        from .losses import log_loss, nll_loss
        return log_loss(out, y) if self.task == BINARY else nll_loss(out, y)

    def predict(self, batch, hook: Hook | None = None) -> np.ndarray:
        """Deterministic-gate probabilities: shape ``(B,)`` binary, ``(B, C)`` multiclass."""
        with no_grad():
            out = self.forward(batch, training=False, hook=hook).data
        return np.exp(out) if self.task == MULTICLASS else out

    def interface(self, batch) -> np.ndarray:
        """Clean interface representation, as seen by the gate."""
        captured = {}

        def grab(r):
            captured["r"] = r.copy()
            return r

        self.predict(batch, hook=grab)
        return captured["r"]
