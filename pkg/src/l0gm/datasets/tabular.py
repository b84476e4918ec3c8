from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..numcore import RngStream

CATEGORICAL = "categorical"
NUMERIC = "numeric"
MISSING = 0


@dataclass
class Bucketizer:
    """Quantile bins per numeric field, fit on training rows only.

    Index 0 is reserved for missing values, so a field with ``k`` boundaries
    has ``k + 2`` embedding rows.
    """

    boundaries: dict[str, np.ndarray]

    @classmethod
    def fit(cls, numeric: dict[str, np.ndarray], rows: np.ndarray, n_bins: int = 16) -> "Bucketizer":
        qs = np.linspace(0, 1, n_bins + 1)[1:-1]
        bounds = {}
        for name, values in numeric.items():
            v = values[rows]
            v = v[np.isfinite(v)]
            bounds[name] = np.unique(np.quantile(v, qs)) if v.size else np.zeros(0)
        return cls(bounds)

    def transform(self, name: str, values: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.boundaries[name], values, side="right") + 1
        return np.where(np.isfinite(values), idx, MISSING).astype(np.int64)

    def vocab_size(self, name: str) -> int:
        return len(self.boundaries[name]) + 2

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in self.boundaries.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "Bucketizer":
        return cls({k: np.asarray(v, dtype=np.float64) for k, v in d.items()})


@dataclass
class TabularDataset:
    field_names: list[str]
    field_types: list[str]
    categorical: dict[str, np.ndarray]  # name -> indices, 0 = missing
    vocabularies: dict[str, list[str]]  # name -> values for indices 1..k
    numeric: dict[str, np.ndarray]  # name -> float values, NaN = missing
    labels: np.ndarray
    hash: str
    splits: dict[str, np.ndarray] = field(default_factory=dict)
    informative: list[int] | None = None  # ground-truth fields for synthetic data

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def m(self) -> int:
        return len(self.field_names)

    def with_splits(self, seed: int, test_frac: float = 0.2, val_frac: float = 0.1,
                    test_index: np.ndarray | None = None) -> "TabularDataset":
        """Copy carrying seeded split indices (see :func:`split_indices`)."""
        return replace(self, splits=split_indices(len(self), seed, test_frac, val_frac, test_index))

    def fit_bucketizer(self, n_bins: int = 16, split: str = "train") -> Bucketizer:
        return Bucketizer.fit(self.numeric, self.splits[split], n_bins)

    def vocab_sizes(self, bucketizer: Bucketizer | None = None) -> list[int]:
        sizes = []
        for name, kind in zip(self.field_names, self.field_types):
            if kind == CATEGORICAL:
                sizes.append(len(self.vocabularies[name]) + 1)
            else:
                sizes.append(bucketizer.vocab_size(name))
        return sizes

    def encode(self, bucketizer: Bucketizer | None = None) -> np.ndarray:
        """All rows as an ``(n, m)`` integer matrix of per-field indices."""
        cols = []
        for name, kind in zip(self.field_names, self.field_types):
            if kind == CATEGORICAL:
                cols.append(self.categorical[name])
            else:
                if bucketizer is None:
                    raise ValueError(f"numeric field {name!r} needs a fitted bucketizer")
                cols.append(bucketizer.transform(name, self.numeric[name]))
        return np.stack(cols, axis=1).astype(np.int64)


def split_indices(n: int, seed: int, test_frac: float = 0.2, val_frac: float = 0.1,
                  test_index: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Seeded train/val/test split; the validation part is carved from train.

    ``test_index`` pins the test rows (an external split file) instead of drawing them.
    """
    rng = RngStream(seed).derive("split")
    if test_index is None:
        perm = rng.permutation(n)
        n_test = math.ceil(test_frac * n)
        test = np.sort(perm[:n_test])
        train = perm[n_test:]
    else:
        test = np.sort(np.asarray(test_index, dtype=np.int64))
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        train = rng.permutation(np.flatnonzero(mask))
    n_val = math.ceil(val_frac * train.size) if val_frac > 0 else 0
    return {"train": np.sort(train[n_val:]), "val": np.sort(train[:n_val]), "test": test}


def array_hash(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()
