"""Accuracy, AUC, binned ECE, a differentiable ECE surrogate, and seed/perturbation aggregates."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .numcore import Tensor
from .numcore import ops


def confidence_and_correct(y_hat, y) -> tuple[np.ndarray, np.ndarray]:
    """Binary: confidence ``max(p, 1 - p)``; multiclass rows: max probability."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y)
    if y_hat.ndim == 2:
        pred = y_hat.argmax(axis=1)
        return y_hat.max(axis=1), (pred == y).astype(np.float64)
    pred = (y_hat > 0.5).astype(np.int64)
    return np.maximum(y_hat, 1.0 - y_hat), (pred == y).astype(np.float64)


@dataclass
class ReliabilityReport:
    """Equal-width confidence bins on [0, 1] and the resulting ECE."""

    n_bins: int
    counts: list[int]
    confidence: list[float]  # mean confidence per bin (0 for empty bins)
    accuracy: list[float]
    ece: float

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def bin_centers(self) -> list[float]:
        return [(m + 0.5) / self.n_bins for m in range(self.n_bins)]

    def rows(self) -> list[dict]:
        return [{"bin_center": c, "conf": cf, "acc": a, "count": k}
                for c, cf, a, k in zip(self.bin_centers, self.confidence, self.accuracy, self.counts)]

    def to_dict(self) -> dict:
        return asdict(self)


def bin_index(conf: np.ndarray, n_bins: int) -> np.ndarray:
    """0-based bin of each confidence: bin ``ceil(c * M)`` in 1-based terms, with 0 in the first bin."""
    idx = np.ceil(np.asarray(conf) * n_bins).astype(np.int64) - 1
    return np.clip(idx, 0, n_bins - 1)


def ece(y_hat, y, n_bins: int = 10) -> ReliabilityReport:
    if n_bins < 1:
        raise ValueError(f"need at least one bin, got {n_bins}")
    conf, correct = confidence_and_correct(y_hat, y)
    if conf.size == 0:
        raise ValueError("ece of an empty prediction set")
    if correct.shape != conf.shape:
        raise ValueError(f"ece: {conf.size} predictions for {np.asarray(y).size} labels")
    idx = bin_index(conf, n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=correct, minlength=n_bins)
    safe = np.maximum(counts, 1)
    mean_conf = np.where(counts > 0, conf_sum / safe, 0.0)
    mean_acc = np.where(counts > 0, acc_sum / safe, 0.0)
    value = float(np.sum(counts / conf.size * np.abs(mean_acc - mean_conf)))
    return ReliabilityReport(n_bins, counts.tolist(), mean_conf.tolist(), mean_acc.tolist(), value)


def auc(y_hat, y) -> float:
    """Mann-Whitney AUC with ties counted as one half.

    A 2-D ``y_hat`` gives the macro average of one-vs-rest AUCs.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y)
    if y_hat.ndim == 2:
        scores = [auc(y_hat[:, c], (y == c).astype(int)) for c in range(y_hat.shape[1])
                  if 0 < np.sum(y == c) < y.size]
        if not scores:
            raise ValueError("auc: need at least one class with both positives and negatives")
        return float(np.mean(scores))
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both classes present")
    ranks = rankdata(y_hat)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def accuracy(y_hat, y, threshold: float = 0.5) -> float:
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y)
    pred = y_hat.argmax(axis=1) if y_hat.ndim == 2 else (y_hat > threshold).astype(np.int64)
    return float(np.mean(pred == y))


def soft_ece_penalty(y_hat: Tensor, y, n_bins: int = 10, bandwidth: float = 0.02) -> Tensor:
    """Kernel-binned ECE that is differentiable in the predicted probabilities.

    Each prediction spreads over the bin centres with Gaussian weights (rows
    normalised), so the per-bin gap ``sum_i w_im (correct_i - conf_i)`` is a
    smooth function of ``y_hat``.  Tends to :func:`ece` as the bandwidth shrinks.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    y_hat = ops.as_tensor(y_hat)
    if y_hat.ndim != 1:
        raise ValueError("soft_ece_penalty supports binary probability vectors")
    y = np.asarray(y)
    n = y_hat.size
    pred = (y_hat.data > 0.5).astype(np.int64)
    correct = (pred == y).astype(np.float64)
    conf = ops.abs(y_hat - 0.5) + 0.5
    centers = (np.arange(n_bins) + 0.5) / n_bins
    diff = ops.reshape(conf, (n, 1)) - centers[None, :]
    # shift by the row minimum squared distance so exp() never underflows to all-zero rows
    d2 = diff * diff
    d2 = d2 - d2.data.min(axis=1, keepdims=True)
    k = ops.exp(d2 * (-0.5 / bandwidth ** 2))
    w = k / ops.sum(k, axis=1, keepdims=True)
    gap = ops.sum(w * ops.reshape(Tensor(correct) - conf, (n, 1)), axis=0)
    return ops.sum(ops.abs(gap)) * (1.0 / n)


# ---------------------------------------------------------------------------
# seed x perturbation aggregates


@dataclass
class RunMatrix:
    seeds: list
    perturbations: list[str]
    values: dict = field(default_factory=dict)  # (seed, perturbation) -> metric
    iid: str = "iid"

    def set(self, seed, perturbation: str, value: float) -> None:
        self.values[(seed, perturbation)] = float(value)

    def missing(self) -> list[tuple]:
        return [(s, p) for s in self.seeds for p in self.perturbations if (s, p) not in self.values]

    def grid(self) -> np.ndarray:
        miss = self.missing()
        if miss:
            raise ValueError(f"incomplete run matrix; missing cells {miss}")
        return np.array([[self.values[(s, p)] for p in self.perturbations] for s in self.seeds])

    def to_dict(self) -> dict:
        return {"seeds": list(self.seeds), "perturbations": list(self.perturbations), "iid": self.iid,
                "values": [[self.values.get((s, p)) for p in self.perturbations] for s in self.seeds]}

    @classmethod
    def from_dict(cls, d: dict) -> "RunMatrix":
        rm = cls(list(d["seeds"]), list(d["perturbations"]), iid=d.get("iid", "iid"))
        for s, row in zip(rm.seeds, d["values"]):
            for p, v in zip(rm.perturbations, row):
                if v is not None:
                    rm.set(s, p, v)
        return rm


def rob_mu(rm: RunMatrix) -> float:
    """Mean metric over every (seed, perturbation) cell."""
    g = rm.grid()
    return float(g.sum() / g.size)


def worst(iid_by_seed: Sequence[float]) -> float:
    """Minimum i.i.d. metric across seeds."""
    values = list(iid_by_seed)
    if not values:
        raise ValueError("worst needs at least one seed")
    return float(min(values))


def worst_of(rm: RunMatrix) -> float:
    rm.grid()
    return worst(rm.values[(s, rm.iid)] for s in rm.seeds)
