"""Uniform train/eval views over the three modalities.

A task hands the trainer model batches and labels for a named split, plus the
shape metadata needed to rebuild a model from a checkpoint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..numcore import RngStream
from .synthetic import GRAPH, TABULAR, TEXT, GraphData, TextData
from .tabular import Bucketizer, TabularDataset


class Task:
    modality: str
    hash: str
    labels: np.ndarray
    splits: dict

    def meta(self) -> dict:
        raise NotImplementedError

    def subset(self, split: str):
        """``(batch, labels)`` for a whole split."""
        raise NotImplementedError

    def train_batches(self, batch_size: int, rng: RngStream) -> Iterator:
        raise NotImplementedError

    def steps_per_epoch(self, batch_size: int) -> int:
        raise NotImplementedError

    def _idx(self, split: str) -> np.ndarray:
        if split not in self.splits:
            raise KeyError(f"no {split!r} split; have {sorted(self.splits)}")
        return self.splits[split]


@dataclass
class TabularTask(Task):
    rows: np.ndarray  # (n, m) per-field indices
    labels: np.ndarray
    splits: dict
    vocab_sizes: list[int]
    hash: str
    field_names: list[str] = field(default_factory=list)
    informative: list[int] | None = None
    bucketizer: Bucketizer | None = None
    modality: str = TABULAR

    @classmethod
    def from_dataset(cls, ds: TabularDataset, n_bins: int = 16,
                     bucketizer: Bucketizer | None = None) -> "TabularTask":
        """Encode ``ds``; numeric bins are fit on its train split unless ``bucketizer`` is given."""
        if bucketizer is None and ds.numeric:
            bucketizer = ds.fit_bucketizer(n_bins)
        return cls(ds.encode(bucketizer), ds.labels, ds.splits, ds.vocab_sizes(bucketizer), ds.hash,
                   list(ds.field_names), ds.informative, bucketizer)

    def meta(self) -> dict:
        return {"modality": self.modality, "vocab_sizes": list(self.vocab_sizes),
                "field_names": list(self.field_names)}

    def subset(self, split):
        idx = self._idx(split)
        return self.rows[idx], self.labels[idx]

    def steps_per_epoch(self, batch_size):
        return -(-self._idx("train").size // batch_size)

    def train_batches(self, batch_size, rng):
        idx = self._idx("train")
        order = idx[rng.permutation(idx.size)]
        for s in range(0, order.size, batch_size):
            b = order[s:s + batch_size]
            yield self.rows[b], self.labels[b]


@dataclass
class GraphTask(Task):
    data: GraphData
    modality: str = GRAPH

    @property
    def hash(self):
        return self.data.hash

    @property
    def labels(self):
        return self.data.labels

    @property
    def splits(self):
        return self.data.splits

    def meta(self):
        return {"modality": self.modality, "in_dim": int(self.data.graph.features.shape[1]),
                "n_classes": int(self.data.n_classes)}

    def subset(self, split):
        idx = self._idx(split)
        return (self.data.graph, idx), self.labels[idx]

    def steps_per_epoch(self, batch_size):
        return 1

    def train_batches(self, batch_size, rng):
        # full-batch training on the transductive graph
        yield self.subset("train")


@dataclass
class TextTask(Task):
    data: TextData
    modality: str = TEXT

    @property
    def hash(self):
        return self.data.hash

    @property
    def labels(self):
        return self.data.labels

    @property
    def splits(self):
        return self.data.splits

    def meta(self):
        return {"modality": self.modality, "vocab_size": int(self.data.vocab_size)}

    def subset(self, split):
        idx = self._idx(split)
        return [self.data.sequences[i] for i in idx], self.labels[idx]

    def steps_per_epoch(self, batch_size):
        return -(-self._idx("train").size // batch_size)

    def train_batches(self, batch_size, rng):
        idx = self._idx("train")
        order = idx[rng.permutation(idx.size)]
        for s in range(0, order.size, batch_size):
            b = order[s:s + batch_size]
            yield [self.data.sequences[i] for i in b], self.labels[b]


def as_task(data) -> Task:
    if isinstance(data, Task):
        return data
    if isinstance(data, TabularDataset):
        return TabularTask.from_dataset(data)
    if isinstance(data, GraphData):
        return GraphTask(data)
    if isinstance(data, TextData):
        return TextTask(data)
    raise TypeError(f"cannot build a task from {type(data).__name__}")
