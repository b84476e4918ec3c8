"""Experiment plans: seeds x configs grids, idempotent execution and aggregation.

Every run is keyed by a content hash of its (config, data, robustness) triple;
its report and checkpoint live under ``<out>/runs/<key>.*`` and a finished
run is never retrained.  The aggregate keeps the raw per-seed metrics so that
Worst and Rob mu can be recomputed from it.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .config import DataConfig, PlanSection
from .datasets import (GRAPH, TABULAR, TEXT, SyntheticSpec, Task, TabularTask, as_task, load_adult,
                       make_synthetic_graph, make_synthetic_tabular, make_synthetic_text, read_split_file)
from .datasets.tabular import Bucketizer
from .metrics import RunMatrix, rob_mu, worst
from .numcore import RngStream
from .robustness import INPUT, INTERFACE, protocol_grid
from .trainer import ConfigError, RunReport, TrainConfig, evaluate, train

KINDS = ("single", "lambda_sweep", "anneal_ablation", "coupling_ablation", "robustness_protocol")
DEFAULT_SEEDS = (0, 1, 2)
DEFAULT_LAMBDAS = tuple(float(v) for v in np.geomspace(1e-4, 1e-2, 5))
DEFAULT_COUPLINGS = (0.1, 0.3, 1.0)
METRICS = ("accuracy", "auc", "ece", "loss", "active_fraction", "expected_l0")
RUN_FORMAT = 1


class IncompleteGridError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# data resolution

def load_task(data: DataConfig, modality: str, bucketizer: Bucketizer | None = None) -> Task:
    key = json.dumps({"data": data.to_dict(), "modality": modality,
                      "bins": bucketizer.to_dict() if bucketizer else None}, sort_keys=True)
    return _load_task(key)


@lru_cache(maxsize=8)
def _load_task(key: str) -> Task:
    d = json.loads(key)
    data = DataConfig(**d["data"])
    modality = d["modality"]
    bucketizer = Bucketizer.from_dict(d["bins"]) if d["bins"] else None
    if data.source == "adult":
        if modality != TABULAR:
            raise ConfigError("the Adult data needs modality = tabular")
        test_index = read_split_file(data.split_file) if data.split_file else None
        ds = load_adult(data.adult_path).with_splits(data.data_seed, data.test_frac, data.val_frac, test_index)
        return TabularTask.from_dataset(ds, data.n_bins, bucketizer)
    spec = SyntheticSpec(modality=modality, test_frac=data.test_frac, val_frac=data.val_frac, **data.synthetic)
    rng = RngStream(data.data_seed).derive("data")
    make = {TABULAR: make_synthetic_tabular, GRAPH: make_synthetic_graph, TEXT: make_synthetic_text}[modality]
    return as_task(make(spec, rng))


def default_target(modality: str) -> str:
    return INPUT if modality == GRAPH else INTERFACE


# ---------------------------------------------------------------------------
# single runs

def run_key(config: TrainConfig, data: DataConfig, robustness: bool) -> str:
    blob = json.dumps({"config": config.to_dict(), "data": data.to_dict(), "robustness": robustness,
                       "format": RUN_FORMAT}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=1, sort_keys=True))
    os.replace(tmp, path)


def run_one(config: TrainConfig, data: DataConfig, out_dir, robustness: bool = False) -> tuple[RunReport, bool]:
    """Train (unless already done) and return ``(report, trained_now)``."""
    runs = Path(out_dir) / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    key = run_key(config, data, robustness)
    report_path = runs / f"{key}.json"
    if report_path.is_file():
        return RunReport.from_dict(json.loads(report_path.read_text())), False
    task = load_task(data, config.modality)
    report = train(config, task, RngStream(config.seed))
    ckpt = save_checkpoint(runs / f"{key}.npz", report.model, config,
                           {**task.meta(), "data": data.to_dict()},
                           getattr(task, "bucketizer", None), task.hash)
    report.checkpoint = str(ckpt.relative_to(Path(out_dir)))
    if robustness:
        grid = protocol_grid(default_target(config.modality))
        report.robustness = evaluate(report.model, task, grid, seed=config.seed)
    _write_json(report_path, report.to_dict())
    return RunReport.from_dict(report.to_dict()), True


def _run_job(args) -> str:
    config, data, out_dir, robustness = args
    run_one(TrainConfig.from_dict(config), DataConfig(**data), out_dir, robustness)
    return run_key(TrainConfig.from_dict(config), DataConfig(**data), robustness)


# ---------------------------------------------------------------------------
# plans

@dataclass
class ExperimentPlan:
    kind: str
    base: TrainConfig
    data: DataConfig
    seeds: tuple = DEFAULT_SEEDS
    grid: tuple = ()  # lambda values (lambda_sweep) or coupling weights (coupling_ablation)
    robustness: bool = False
    out_dir: str = ""

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        self.grid = tuple(float(v) for v in self.grid)
        if self.kind not in KINDS:
            raise ConfigError(f"plan kind must be one of {KINDS}, got {self.kind!r}")
        if not self.seeds:
            raise ConfigError("plan needs at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"duplicate seeds in {self.seeds}")
        if self.kind == "robustness_protocol":
            self.robustness = True
        if self.base.protocol and self.kind == "lambda_sweep":
            bad = [v for v in self.lambdas if not 1e-4 <= v <= 1e-2]
            if bad:
                raise ConfigError(f"lambda grid {bad} leaves the log-grid range [1e-4, 1e-2] (protocol mode)")

    @classmethod
    def from_sections(cls, section: PlanSection, base: TrainConfig, data: DataConfig, out_dir="") -> "ExperimentPlan":
        return cls(section.kind, base, data, section.seeds, section.grid, section.robustness, str(out_dir))

    @property
    def lambdas(self) -> tuple:
        return self.grid or DEFAULT_LAMBDAS

    def cells(self) -> list[tuple[str, TrainConfig]]:
        b = self.base
        if self.kind == "lambda_sweep":
            return [(f"lambda={v:.3g}", replace(b, lambda_target=v)) for v in self.lambdas]
        if self.kind == "anneal_ablation":
            return [("annealed", replace(b, anneal_mode="annealed")), ("fixed", replace(b, anneal_mode="fixed"))]
        if self.kind == "coupling_ablation":
            weights = (0.0,) + tuple(w for w in (self.grid or DEFAULT_COUPLINGS) if w != 0)
            return [(f"coupling={w:g}", replace(b, coupling_weight=w)) for w in weights]
        return [("base", b)]

    def runs(self) -> list[tuple[str, int, TrainConfig]]:
        return [(name, s, replace(cfg, seed=s)) for name, cfg in self.cells() for s in self.seeds]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seeds": list(self.seeds), "grid": list(self.grid),
                "robustness": self.robustness, "base": self.base.to_dict(), "data": self.data.to_dict()}


def run_plan(plan: ExperimentPlan, jobs: int = 1, out_dir=None) -> "AggregateReport":
    out = Path(out_dir or plan.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    todo = []
    for _, _, cfg in plan.runs():
        if not (out / "runs" / f"{run_key(cfg, plan.data, plan.robustness)}.json").is_file():
            todo.append((cfg.to_dict(), plan.data.to_dict(), str(out), plan.robustness))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_run_job, todo))
    else:
        for job in todo:
            _run_job(job)
    report = aggregate(plan, out)
    report.trained = len(todo)
    report.save(out)
    return report


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class AggregateReport:
    plan: dict
    dataset_hash: str
    modality: str
    configs: list
    pareto: list
    trained: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {"plan": self.plan, "dataset_hash": self.dataset_hash, "modality": self.modality,
                "configs": self.configs, "pareto": self.pareto}

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateReport":
        return cls(d["plan"], d["dataset_hash"], d["modality"], d["configs"], d["pareto"])

    def save(self, out_dir) -> Path:
        out = Path(out_dir)
        _write_json(out / "aggregate.json", self.to_dict())
        # one self-describing record per run
        with open(out / "runs.jsonl", "w") as fh:
            for c in self.configs:
                for row in c["per_seed"]:
                    fh.write(json.dumps({"record": "run", "config": c["name"], **row}, sort_keys=True) + "\n")
        return out / "aggregate.json"

    @classmethod
    def load(cls, path) -> "AggregateReport":
        path = Path(path)
        if path.is_dir():
            path = path / "aggregate.json"
        return cls.from_dict(json.loads(path.read_text()))

    def config(self, name: str) -> dict:
        for c in self.configs:
            if c["name"] == name:
                return c
        raise KeyError(f"no config {name!r}; have {[c['name'] for c in self.configs]}")


def _pooled_reliability(tables: list[dict]) -> dict:
    n_bins = tables[0]["n_bins"]
    counts = np.zeros(n_bins)
    conf = np.zeros(n_bins)
    acc = np.zeros(n_bins)
    for t in tables:
        k = np.asarray(t["counts"], dtype=np.float64)
        counts += k
        conf += k * np.asarray(t["confidence"])
        acc += k * np.asarray(t["accuracy"])
    safe = np.maximum(counts, 1)
    conf = np.where(counts > 0, conf / safe, 0.0)
    acc = np.where(counts > 0, acc / safe, 0.0)
    value = float(np.sum(counts / counts.sum() * np.abs(acc - conf)))
    return {"n_bins": n_bins, "counts": counts.astype(int).tolist(), "confidence": conf.tolist(),
            "accuracy": acc.tolist(), "ece": value}


def _run_matrices(seeds, reports: dict[int, RunReport]) -> dict:
    first = reports[seeds[0]]
    conditions = [r["condition"] for r in first.robustness] if first.robustness else ["iid"]
    out = {}
    for metric in ("accuracy", "auc", "ece"):
        rm = RunMatrix(list(seeds), list(conditions))
        for s in seeds:
            rep = reports[s]
            if rep.robustness:
                for row in rep.robustness:
                    rm.set(s, row["condition"], row[metric])
            else:
                rm.set(s, "iid", rep.best[metric])
        out[metric] = rm
    return out


def pareto_points(configs: list[dict], metric: str = "accuracy") -> list[dict]:
    pts = [{"config": c["name"], "lambda": c["lambda_target"], "active_fraction": c["mean"]["active_fraction"],
            "accuracy": c["mean"]["accuracy"], "auc": c["mean"]["auc"], "ece": c["mean"]["ece"]}
           for c in configs]
    for p in pts:
        p["frontier"] = not any(
            q is not p and q["active_fraction"] <= p["active_fraction"] and q[metric] >= p[metric]
            and (q["active_fraction"] < p["active_fraction"] or q[metric] > p[metric]) for q in pts)
    return sorted(pts, key=lambda p: (p["active_fraction"], p["lambda"]))


def aggregate(plan: ExperimentPlan, out_dir) -> AggregateReport:
    out = Path(out_dir)
    found, missing = {}, []
    for name, seed, cfg in plan.runs():
        path = out / "runs" / f"{run_key(cfg, plan.data, plan.robustness)}.json"
        if path.is_file():
            found[(name, seed)] = (path.stem, RunReport.from_dict(json.loads(path.read_text())))
        else:
            missing.append((name, seed))
    if missing:
        raise IncompleteGridError(f"missing (config, seed) cells: {missing}")

    configs, hashes = [], set()
    for name, cfg in plan.cells():
        reports = {s: found[(name, s)][1] for s in plan.seeds}
        hashes.update(r.dataset_hash for r in reports.values())
        per_seed = []
        for s in plan.seeds:
            key, rep = found[(name, s)]
            per_seed.append({"seed": s, "run": key, "checkpoint": rep.checkpoint, "step": rep.best["step"],
                             **{m: rep.best[m] for m in METRICS}})
        rms = _run_matrices(plan.seeds, reports)
        entry = {
            "name": name,
            "lambda_target": cfg.lambda_target,
            "coupling_weight": cfg.coupling_weight,
            "anneal_mode": cfg.anneal_mode,
            "seeds": list(plan.seeds),
            "per_seed": per_seed,
            "mean": {m: float(np.mean([row[m] for row in per_seed])) for m in METRICS},
            "worst": {m: worst(rms[m].values[(s, "iid")] for s in plan.seeds) for m in ("accuracy", "auc")},
            "rob_mu": ({m: rob_mu(rms[m]) for m in ("accuracy", "auc", "ece")}
                       if plan.robustness else None),
            "run_matrix": {m: rm.to_dict() for m, rm in rms.items()},
            "reliability": _pooled_reliability([reports[s].reliability for s in plan.seeds]),
            "learning_curves": {str(s): reports[s].curve for s in plan.seeds},
        }
        configs.append(entry)
    return AggregateReport(plan.to_dict(), ",".join(sorted(hashes)), plan.base.modality, configs,
                           pareto_points(configs))
