from __future__ import annotations

from typing import Iterable

import numpy as np

from ..numcore import Tensor
from ..numcore import ops

PROB_CLAMP = 1e-12


def log_loss(y_hat: Tensor, y) -> Tensor:
    """Mean binary cross-entropy of probabilities ``y_hat`` against 0/1 labels."""
    y_hat = ops.as_tensor(y_hat)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y_hat.size != y.size:
        raise ValueError(f"log_loss: {y_hat.size} predictions for {y.size} labels")
    p = ops.clip(ops.reshape(y_hat, (-1,)), PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = ops.log(p) * y + ops.log(1.0 - p) * (1.0 - y)
    return -ops.mean(ll)


def nll_loss(log_probs: Tensor, y) -> Tensor:
    """Mean negative log-likelihood of integer labels under row log-probabilities."""
    y = np.asarray(y, dtype=np.int64)
    if log_probs.shape[0] != y.size:
        raise ValueError(f"nll_loss: {log_probs.shape[0]} rows for {y.size} labels")
    onehot = np.zeros(log_probs.shape)
    onehot[np.arange(y.size), y] = 1.0
    return -ops.sum(log_probs * onehot) * (1.0 / y.size)


def total_objective(task_loss: Tensor, gates: Iterable, lam: float, tau: float = 1.0) -> Tensor:
    """Task loss plus ``lam`` times the summed expected L0 of every attached gate."""
    if lam < 0:
        raise ValueError(f"penalty weight must be non-negative, got {lam}")
    gates = [g for g in gates if g is not None]
    if lam == 0 or not gates:
        return task_loss
    penalty = gates[0].penalty(tau)
    for g in gates[1:]:
        penalty = penalty + g.penalty(tau)
    return task_loss + penalty * lam
