"""Seeded synthetic generators with a known informative subset, one per modality."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..backbones.graph import GraphSpec
from ..numcore import RngStream
from .tabular import CATEGORICAL, TabularDataset, array_hash, split_indices

TABULAR = "tabular"
GRAPH = "graph"
TEXT = "text"
MODALITIES = (TABULAR, GRAPH, TEXT)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generative parameters; fields irrelevant to ``modality`` are ignored.

    ``noise`` is the temperature of the logistic label noise (tabular) or the
    std of the feature noise (graph).  ``k_true`` counts informative fields
    (tabular), informative feature dimensions (graph) or indicative tokens per
    class (text).
    """

    modality: str = TABULAR
    n: int = 10_000
    k_true: int = 4
    noise: float = 1.0
    # tabular
    n_fields: int = 20
    cardinality: int = 8
    signal: float = 2.0
    # graph
    n_classes: int = 3
    n_features: int = 16
    p_in: float = 0.05
    p_out: float = 0.005
    # text
    vocab: int = 200
    min_len: int = 8
    max_len: int = 24
    indicative_rate: float = 0.9
    topical_frac: float = 0.3
    # splits
    test_frac: float = 0.2
    val_frac: float = 0.1

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {self.modality!r}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.k_true < 0:
            raise ValueError(f"k_true must be non-negative, got {self.k_true}")
        if self.noise < 0:
            raise ValueError(f"noise must be non-negative, got {self.noise}")

    def to_dict(self) -> dict:
        return asdict(self)


def make_synthetic_tabular(spec: SyntheticSpec, rng: RngStream) -> TabularDataset:
    """Categorical fields; the label follows a logistic link on the first ``k_true`` fields' effects.

    Each informative field gets a centred, unit-variance table of per-category
    effects, so ``logit = signal * sum_j effect_j[x_j] / sqrt(k_true)`` and
    ``y = 1[logit + noise * Logistic > 0]``.  ``noise = 0`` makes labels a
    deterministic function of the informative fields; ``k_true = 0`` gives
    fair-coin labels.  Category 0 is reserved for missing and never drawn.
    """
    if spec.k_true > spec.n_fields:
        raise ValueError(f"k_true={spec.k_true} exceeds the {spec.n_fields} fields")
    if spec.cardinality < 2:
        raise ValueError("fields need at least two categories")
    x = rng.derive("x").integers(1, spec.cardinality + 1, size=(spec.n, spec.n_fields))
    informative = sorted(rng.derive("informative").permutation(spec.n_fields)[: spec.k_true].tolist())
    if spec.k_true == 0:
        y = (rng.derive("y").random(spec.n) < 0.5).astype(np.int64)
    else:
        eff_rng = rng.derive("effects")
        logit = np.zeros(spec.n)
        for j in informative:
            eff = eff_rng.normal(size=spec.cardinality + 1)
            eff[1:] = (eff[1:] - eff[1:].mean()) / (eff[1:].std() + 1e-12)
            logit += eff[x[:, j]]
        logit *= spec.signal / np.sqrt(spec.k_true)
        u = rng.derive("y").uniform(1e-12, 1 - 1e-12, size=spec.n)
        y = (logit + spec.noise * (np.log(u) - np.log1p(-u)) > 0).astype(np.int64)
    names = [f"f{j:02d}" for j in range(spec.n_fields)]
    vocab = [str(c) for c in range(1, spec.cardinality + 1)]
    ds = TabularDataset(
        field_names=names,
        field_types=[CATEGORICAL] * spec.n_fields,
        categorical={name: x[:, j].astype(np.int64) for j, name in enumerate(names)},
        vocabularies={name: list(vocab) for name in names},
        numeric={},
        labels=y,
        hash=array_hash(x, y),
        informative=informative,
    )
    ds.splits = split_indices(spec.n, rng.derive("split").integers(0, 2**31), spec.test_frac, spec.val_frac)
    return ds


@dataclass
class GraphData:
    graph: GraphSpec
    labels: np.ndarray
    n_classes: int
    informative: list[int]
    hash: str
    splits: dict = field(default_factory=dict)  # name -> node index array


def make_synthetic_graph(spec: SyntheticSpec, rng: RngStream) -> GraphData:
    """Stochastic block model with class-aligned blocks.

    Node features are a ``±1`` class prototype on ``k_true`` informative
    dimensions plus Gaussian noise of std ``noise`` on every dimension.
    """
    if spec.n_classes < 2:
        raise ValueError(f"need at least two classes, got {spec.n_classes}")
    if spec.k_true > spec.n_features:
        raise ValueError(f"k_true={spec.k_true} exceeds the {spec.n_features} feature dimensions")
    n = spec.n
    labels = np.sort(rng.derive("labels").integers(0, spec.n_classes, size=n))
    labels = labels[rng.derive("order").permutation(n)]
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(labels[iu] == labels[ju], spec.p_in, spec.p_out)
    keep = rng.derive("edges").random(iu.size) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    informative = sorted(rng.derive("informative").permutation(spec.n_features)[: spec.k_true].tolist())
    protos = np.zeros((spec.n_classes, spec.n_features))
    protos[:, informative] = np.where(
        rng.derive("protos").random((spec.n_classes, spec.k_true)) < 0.5, -1.0, 1.0)
    X = protos[labels] + spec.noise * rng.derive("features").normal(size=(n, spec.n_features))
    splits = split_indices(n, rng.derive("split").integers(0, 2**31), spec.test_frac, spec.val_frac)
    masks = {name: np.isin(np.arange(n), idx) for name, idx in splits.items()}
    g = GraphSpec(n, edges, X, labels, masks)
    return GraphData(g, labels, spec.n_classes, informative, array_hash(edges, X, labels), splits)


@dataclass
class TextData:
    sequences: list[np.ndarray]
    labels: np.ndarray
    vocab_size: int
    indicative: dict[int, list[int]]  # class -> indicative token ids
    hash: str
    splits: dict = field(default_factory=dict)


def make_synthetic_text(spec: SyntheticSpec, rng: RngStream) -> TextData:
    """Binary documents over a token vocabulary.

    A fraction ``topical_frac`` of each document's tokens is topical; a topical
    token comes from the document's own class set with probability
    ``indicative_rate`` and from the other class's set otherwise.  Remaining
    tokens are uniform background.  Rate 1.0 separates the classes; rate 0.5
    makes them indistinguishable.
    """
    if spec.vocab < 2:
        raise ValueError(f"vocabulary needs at least two tokens, got {spec.vocab}")
    if not 1 <= spec.min_len <= spec.max_len:
        raise ValueError(f"need 1 <= min_len <= max_len, got [{spec.min_len}, {spec.max_len}]")
    k = max(1, min(spec.k_true, spec.vocab // 2))
    perm = rng.derive("tokens").permutation(spec.vocab)
    sets = {0: np.sort(perm[:k]), 1: np.sort(perm[k:2 * k])}
    background = np.sort(perm[2 * k:]) if spec.vocab > 2 * k else perm
    y = (rng.derive("y").random(spec.n) < 0.5).astype(np.int64)
    lengths = rng.derive("lengths").integers(spec.min_len, spec.max_len + 1, size=spec.n)
    draw = rng.derive("draw")
    seqs = []
    for label, length in zip(y, lengths):
        topical = draw.random(length) < spec.topical_frac
        own = draw.random(length) < spec.indicative_rate
        src = np.where(own, label, 1 - label)
        pick = draw.integers(0, k, size=length)
        toks = np.where(src == 0, sets[0][pick], sets[1][pick])
        bg = background[draw.integers(0, background.size, size=length)]
        seqs.append(np.where(topical, toks, bg).astype(np.int64))
    splits = split_indices(spec.n, rng.derive("split").integers(0, 2**31), spec.test_frac, spec.val_frac)
    h = array_hash(np.concatenate(seqs), lengths, y)
    return TextData(seqs, y, spec.vocab, {c: s.tolist() for c, s in sets.items()}, h, splits)
