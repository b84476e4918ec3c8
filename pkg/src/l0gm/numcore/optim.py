"""Adam with bias correction, operating in place on :class:`Tensor` leaves."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[Tensor]) -> "AdamState":
        return cls([np.zeros_like(p.data) for p in params],
                   [np.zeros_like(p.data) for p in params])


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None], state: AdamState,
              lr: float, betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> None:
    """One Adam update.  ``state.step`` is incremented before the bias correction."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            continue
        m, v = state.m[i], state.v[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


@dataclass
class ParamGroup:
    params: list[Tensor]
    lr: float
    weight_decay: float = 0.0
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.state = AdamState.zeros_like(self.params)


class Adam:
    """Adam over one or more parameter groups.

    Weight decay is the classic L2 form (added to the gradient) and is set per
    group, so gate logits can sit in a group without decay.
    """

    def __init__(self, groups: Sequence[ParamGroup], betas=(0.9, 0.999), eps=1e-8):
        self.groups = list(groups)
        self.betas = betas
        self.eps = eps

    @property
    def params(self) -> list[Tensor]:
        return [p for g in self.groups for p in g.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        for group in self.groups:
            grads = []
            for p in group.params:
                g = p.grad
                if g is not None and group.weight_decay:
                    g = g + group.weight_decay * p.data
                grads.append(g)
            adam_step(group.params, grads, group.state, group.lr, self.betas, self.eps)
