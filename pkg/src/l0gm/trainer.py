"""Gated training loop and evaluation over perturbation grids.

Each step anneals ``(tau_t, lambda_t)``, samples one stochastic gate mask,
minimises ``task loss + lambda_t * E[L0] (+ coupling * soft ECE)`` with Adam
and, at every validation point, scores the deterministic-gate model on the
validation split.  The returned report carries the parameters with the lowest
validation loss.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .backbones import (BINARY, GraphClassifier, IntegratedPredictor, PooledTextClassifier, log_loss,
                        nll_loss, total_objective)
from .backbones.base import GatedModel
from .gate import inference_mask
from .datasets import GRAPH, TABULAR, TEXT, Task, as_task
from .metrics import accuracy, auc, ece, soft_ece_penalty
from .numcore import Adam, ParamGroup, RngStream, Tensor, backward
from .robustness import (INTERFACE, FeatureStats, PerturbationSpec, apply_perturbation,
                         condition_rng, perturb_indices)
from .schedule import AnnealSpec, lambda_at, tau_at

BACKBONES = {TABULAR: ("integrated",), GRAPH: ("gcn", "sage"), TEXT: ("pooled",)}
DEFAULT_GATE_SITE = {"integrated": "embedding", "gcn": "final", "sage": "final", "pooled": "pooled"}

# protocol-mode ranges from the hyperparameter search space
PROTOCOL_RANGES = {
    "lr": (1e-4, 3e-4, 1e-3),
    "weight_decay": (0.0, 1e-6, 1e-5, 1e-4),
    "dropout": (0.0, 0.05, 0.10, 0.15),
    "batch_size": (64, 128, 256, 512),
    "lambda_target": (1e-4, 1e-2),
    "warmup_frac": (0.05, 0.20),
    "tau_end": (0.5, 2.0),
    "coupling_weight": (0.0, 0.1, 0.3, 1.0),
}
INTERVAL_KEYS = ("lambda_target", "warmup_frac", "tau_end")


class ConfigError(ValueError):
    pass


class DivergenceError(FloatingPointError):
    def __init__(self, step: int, last_finite_step: int, value: float):
        super().__init__(f"non-finite objective ({value}) at step {step}; last finite step {last_finite_step}")
        self.step = step
        self.last_finite_step = last_finite_step


@dataclass
class TrainConfig:
    modality: str = TABULAR
    backbone: str = "integrated"
    # backbone
    embed_dim: int = 8
    cin_widths: tuple = (16, 16)
    cin_lowrank: int = 0  # 0 = full-rank CIN weights
    dnn_hidden: tuple = (64, 32)
    use_linear: bool = True
    use_cin: bool = True
    use_dnn: bool = True
    graph_hidden: tuple = (32,)
    text_dim: int = 16
    # gate
    gate_at: str = "default"  # backbone's interface; "none" trains the dense model
    gate_init: float = 2.0
    gate_init_std: float = 0.01
    gamma: float = -0.1
    zeta: float = 1.1
    pi: float = 0.5
    freeze_gates: bool = False
    # schedule
    lambda_target: float = 1e-3
    anneal_mode: str = "annealed"
    anneal_lambda: bool = True
    anneal_tau: bool = True
    warmup_frac: float = 0.1
    tau_start: float = 1.0
    tau_end: float = 0.5
    # optimisation
    lr: float = 1e-3
    gate_lr: float = 0.05  # gate logits' own step size; 0 = same as lr
    weight_decay: float = 0.0
    dropout: float = 0.0
    batch_size: int = 256
    epochs: int = 5
    eval_every: int = 0  # steps between validations; 0 = once per epoch
    coupling_weight: float = 0.0
    coupling_bins: int = 10
    coupling_bandwidth: float = 0.02
    select: str = "val_loss"  # or "last"
    select_after_warmup: bool = True
    seed: int = 0
    protocol: bool = False

    def __post_init__(self):
        for name in ("cin_widths", "dnn_hidden", "graph_hidden"):
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    @property
    def site(self) -> str:
        return DEFAULT_GATE_SITE.get(self.backbone, "none") if self.gate_at == "default" else self.gate_at

    def validate(self) -> None:
        if self.modality not in BACKBONES:
            raise ConfigError(f"modality must be one of {sorted(BACKBONES)}, got {self.modality!r}")
        if self.backbone not in BACKBONES[self.modality]:
            raise ConfigError(f"backbone {self.backbone!r} is not a {self.modality} backbone; "
                              f"choose from {BACKBONES[self.modality]}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.lr <= 0 or self.gate_lr < 0:
            raise ConfigError("learning rates must be positive")
        if self.select not in ("val_loss", "last"):
            raise ConfigError(f"select must be 'val_loss' or 'last', got {self.select!r}")
        if self.coupling_weight < 0:
            raise ConfigError("coupling_weight must be non-negative")
        if self.protocol:
            self._check_protocol()

    def _check_protocol(self) -> None:
        for key, allowed in PROTOCOL_RANGES.items():
            v = getattr(self, key)
            if key in INTERVAL_KEYS:
                lo, hi = allowed
                ok = lo <= v <= hi or (key == "lambda_target" and v == 0)
                msg = f"[{lo:g}, {hi:g}]"
            else:
                ok = any(math.isclose(v, a, rel_tol=1e-9, abs_tol=1e-15) for a in allowed)
                msg = "{" + ", ".join(f"{a:g}" for a in allowed) + "}"
            if not ok:
                raise ConfigError(f"{key}={v:g} is outside the hyperparameter search space {msg} "
                                  f"(protocol mode)")

    def anneal_spec(self, total_steps: int) -> AnnealSpec:
        return AnnealSpec(total_steps, self.warmup_frac, self.tau_start, self.tau_end, self.lambda_target,
                          self.anneal_mode, self.anneal_lambda, self.anneal_tau)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("cin_widths", "dnn_hidden", "graph_hidden"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def content_hash(self) -> str:
        import hashlib
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def build_model(config: TrainConfig, meta: dict, rng: RngStream) -> GatedModel:
    gate_kw = dict(gate_init=config.gate_init, gate_init_std=config.gate_init_std,
                   gamma=config.gamma, zeta=config.zeta, pi=config.pi)
    site = config.site
    if config.backbone == "integrated":
        return IntegratedPredictor(meta["vocab_sizes"], rng, config.embed_dim, config.cin_widths,
                                   config.cin_lowrank or None, config.dnn_hidden, config.dropout, site,
                                   config.use_linear, config.use_cin, config.use_dnn, **gate_kw)
    if config.backbone in ("gcn", "sage"):
        return GraphClassifier(meta["in_dim"], config.graph_hidden, meta["n_classes"], rng,
                               config.backbone, site, **gate_kw)
    return PooledTextClassifier(meta["vocab_size"], config.text_dim, rng, site, **gate_kw)


# ---------------------------------------------------------------------------
# prediction helpers

def _chunks(batch, size: int):
    if isinstance(batch, tuple):  # graph (spec, idx): one full-graph pass
        yield slice(None), batch
        return
    n = len(batch)
    for s in range(0, n, size):
        yield slice(s, s + size), batch[s:s + size]


def predict(model: GatedModel, batch, interface: np.ndarray | None = None, chunk: int = 2048) -> np.ndarray:
    """Deterministic-gate probabilities; ``interface`` replaces the clean representation."""
    outs = []
    for sl, part in _chunks(batch, chunk):
        hook = None if interface is None else (lambda r, sl=sl: interface[sl])
        outs.append(model.predict(part, hook=hook))
    return np.concatenate(outs, axis=0)


def interface_of(model: GatedModel, batch, chunk: int = 2048) -> np.ndarray:
    return np.concatenate([model.interface(part) for _, part in _chunks(batch, chunk)], axis=0)


def score(model: GatedModel, probs: np.ndarray, y, n_bins: int = 10) -> dict:
    if model.task == BINARY:
        loss = float(log_loss(Tensor(probs), y).data)
    else:
        loss = float(nll_loss(Tensor(np.log(np.clip(probs, 1e-12, None))), y).data)
    try:
        a = auc(probs, y)
    except ValueError:
        a = float("nan")
    rel = ece(probs, y, n_bins)
    return {"loss": loss, "accuracy": accuracy(probs, y), "auc": a, "ece": rel.ece}


def gate_summary(model: GatedModel, tau: float) -> dict:
    if model.gate is None:
        return {"active_fraction": 1.0, "expected_l0": float("nan"), "gate_dim": 0}
    return {"active_fraction": model.gate.active_fraction(),
            "expected_l0": float(model.gate.penalty(tau).data),
            "gate_dim": model.gate.dim}


# ---------------------------------------------------------------------------
# training

@dataclass
class RunReport:
    config: dict
    seed: int
    dataset_hash: str
    steps: int
    best: dict  # test metrics of the selected checkpoint, plus its step and validation loss
    final: dict  # test metrics of the last-step parameters
    curve: list = field(default_factory=list)
    reliability: dict = field(default_factory=dict)
    gate_mask: list | None = None
    checkpoint: str | None = None
    robustness: list | None = None  # per-condition rows from :func:`evaluate`
    model: GatedModel | None = field(default=None, repr=False, compare=False)
    task: Task | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("model", "task")}
        return json.loads(json.dumps(d))

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)


def _param_groups(model: GatedModel, config: TrainConfig) -> list[ParamGroup]:
    gate_ids = {id(p) for g in model.gates() for p in g.parameters()}
    body = [p for p in model.parameters() if id(p) not in gate_ids]
    groups = [ParamGroup(body, config.lr, config.weight_decay)]
    gate_params = [p for g in model.gates() for p in g.parameters()]
    if gate_params and not config.freeze_gates:
        # decaying alpha would fight the penalty's own pressure, so no weight decay here
        groups.append(ParamGroup(gate_params, config.gate_lr or config.lr, 0.0))
    return groups


def train(config: TrainConfig, data, rng: RngStream | None = None) -> RunReport:
    task = as_task(data)
    rng = rng if rng is not None else RngStream(config.seed)
    model = build_model(config, task.meta(), rng.derive("init"))
    opt = Adam(_param_groups(model, config))
    per_epoch = task.steps_per_epoch(config.batch_size)
    total = config.epochs * per_epoch
    spec = config.anneal_spec(total)
    eval_every = config.eval_every or per_epoch
    gate_rng, drop_rng, order_rng = rng.derive("gate"), rng.derive("dropout"), rng.derive("order")
    coupled = config.coupling_weight > 0 and model.task == BINARY

    x_val, y_val = task.subset("val")
    best_state, best_val, best_step = None, math.inf, 0
    curve, t, last_finite, train_losses = [], 0, -1, []
    for epoch in range(config.epochs):
        for xb, yb in task.train_batches(config.batch_size, order_rng):
            tau, lam = tau_at(spec, t), lambda_at(spec, t)
            out = model.forward(xb, training=True, tau=tau, gate_rng=gate_rng, dropout_rng=drop_rng)
            loss = model.task_loss(out, yb)
            J = total_objective(loss, model.gates(), lam, tau)
            if coupled:
                J = J + soft_ece_penalty(out, yb, config.coupling_bins, config.coupling_bandwidth) \
                    * config.coupling_weight
            value = float(J.data)
            if not math.isfinite(value):
                raise DivergenceError(t, last_finite, value)
            last_finite = t
            opt.zero_grad()
            backward(J)
            opt.step()
            train_losses.append(float(loss.data))
            t += 1
            if t % eval_every == 0 or t == total:
                val = score(model, predict(model, x_val), y_val)
                row = {"step": t, "epoch": epoch + 1, "train_loss": float(np.mean(train_losses)),
                       "val_loss": val["loss"], "val_accuracy": val["accuracy"], "val_auc": val["auc"],
                       "lambda": lambda_at(spec, t), "tau": tau_at(spec, t),
                       **gate_summary(model, tau_at(spec, t))}
                curve.append(row)
                train_losses = []
                eligible = (config.select == "val_loss" and not
                            (config.select_after_warmup and spec.lambda_target > 0
                             and lambda_at(spec, t) < spec.lambda_target))
                if config.select == "last" or (eligible and val["loss"] < best_val):
                    best_state, best_val, best_step = model.state_dict(), val["loss"], t

    x_test, y_test = task.subset("test")
    final = _test_metrics(model, x_test, y_test, tau_at(spec, total))
    if best_state is None:  # nothing eligible: keep the last parameters
        best_state, best_step = model.state_dict(), total
        best_val = curve[-1]["val_loss"]
    model.load_state_dict(best_state)
    best = _test_metrics(model, x_test, y_test, tau_at(spec, total))
    best.update(step=best_step, val_loss=best_val)
    probs = predict(model, x_test)
    return RunReport(
        config=config.to_dict(), seed=config.seed, dataset_hash=task.hash, steps=total, best=best,
        final=final, curve=curve, reliability=ece(probs, y_test, 10).to_dict(),
        gate_mask=None if model.gate is None else inference_mask(model.gate.params).astype(int).tolist(),
        model=model, task=task)


def _test_metrics(model, x, y, tau) -> dict:
    m = score(model, predict(model, x), y)
    m.update(gate_summary(model, tau))
    return m


# ---------------------------------------------------------------------------
# evaluation over a perturbation grid

def evaluate(model: GatedModel, data, grid: Sequence[PerturbationSpec], seed: int = 0,
             split: str = "test", n_bins: int = 10) -> list[dict]:
    """One metric row per condition, in grid order, with deterministic gates.

    Interface-targeted perturbations act on the clean interface representation
    of the whole split, with feature statistics frozen from it; input-targeted
    ones act on node attributes (graphs) or categorical indices (tables).
    """
    task = as_task(data)
    x, y = task.subset(split)
    clean = None
    rows = []
    for spec in grid:
        rng = condition_rng(seed, spec)
        if spec.kind == "iid":
            probs = predict(model, x)
        elif spec.target == INTERFACE:
            if clean is None:
                clean = interface_of(model, x)
            pert = apply_perturbation(clean, spec, FeatureStats.of(clean), rng)
            probs = predict(model, x, interface=pert)
        elif task.modality == GRAPH:
            g, idx = x
            feats = g.features
            pert = apply_perturbation(feats, spec, FeatureStats.of(feats), rng)
            probs = predict(model, (g.with_features(pert), idx))
        elif task.modality == TABULAR:
            probs = predict(model, perturb_indices(x, spec, rng))
        else:
            raise ValueError(f"input-level perturbation is undefined for {task.modality}; target the interface")
        row = {"condition": spec.label, "target": spec.target}
        row.update(score(model, probs, y, n_bins))
        rows.append(row)
    return rows
