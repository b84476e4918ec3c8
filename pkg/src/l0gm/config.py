"""Run configuration files.

A config is an INI file whose sections group keys by module::

    [model]     modality, backbone, embed_dim, cin_widths, cin_lowrank, dnn_hidden,
                use_linear, use_cin, use_dnn, graph_hidden, text_dim, dropout
    [gate]      gate_at, gate_init, gate_init_std, gamma, zeta, pi, freeze_gates
    [schedule]  lambda_target, anneal_mode, anneal_lambda, anneal_tau, warmup_frac,
                tau_start, tau_end
    [train]     lr, gate_lr, weight_decay, batch_size, epochs, eval_every,
                coupling_weight, coupling_bins, coupling_bandwidth, select,
                select_after_warmup, seed, protocol
    [data]      source, path, split_file, data_seed, n_bins, test_frac, val_frac
    [synthetic] any SyntheticSpec field except modality
    [plan]      kind, seeds, grid, robustness

Every key is optional; omitted keys take the dataclass defaults.  Lists are
comma-separated.  ``L0GM_SEED`` in the environment replaces ``[train] seed``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

from .datasets import ADULT_PATH, SyntheticSpec
from .trainer import ConfigError, TrainConfig

SEED_ENV = "L0GM_SEED"

SECTIONS = {
    "model": ("modality", "backbone", "embed_dim", "cin_widths", "cin_lowrank", "dnn_hidden", "use_linear",
              "use_cin", "use_dnn", "graph_hidden", "text_dim", "dropout"),
    "gate": ("gate_at", "gate_init", "gate_init_std", "gamma", "zeta", "pi", "freeze_gates"),
    "schedule": ("lambda_target", "anneal_mode", "anneal_lambda", "anneal_tau", "warmup_frac", "tau_start",
                 "tau_end"),
    "train": ("lr", "gate_lr", "weight_decay", "batch_size", "epochs", "eval_every", "coupling_weight",
              "coupling_bins", "coupling_bandwidth", "select", "select_after_warmup", "seed", "protocol"),
}


@dataclass
class DataConfig:
    source: str = "synthetic"  # "adult" or "synthetic"
    path: str = ""  # Adult CSV; empty = bundled copy
    split_file: str = ""  # optional file of test-row indices
    data_seed: int = 0  # split and generator seed, independent of the run seed
    n_bins: int = 16
    test_frac: float = 0.2
    val_frac: float = 0.1
    synthetic: dict = field(default_factory=dict)  # SyntheticSpec overrides

    def __post_init__(self):
        if self.source not in ("adult", "synthetic"):
            raise ConfigError(f"[data] source must be 'adult' or 'synthetic', got {self.source!r}")
        known = {f.name for f in fields(SyntheticSpec)} - {"modality"}
        unknown = set(self.synthetic) - known
        if unknown:
            raise ConfigError(f"[synthetic] unknown keys {sorted(unknown)}")

    @property
    def adult_path(self) -> Path:
        return Path(self.path) if self.path else ADULT_PATH

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PlanSection:
    kind: str = "single"
    seeds: tuple = (0, 1, 2)
    grid: tuple = ()
    robustness: bool = False


def _parse(raw: str, default, name: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [t.strip() for t in raw.split(",") if t.strip()]
            kind = type(default[0]) if default else float
            return tuple(kind(t) for t in items)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def _defaults(cls) -> dict:
    out = {}
    for f in fields(cls):
        if f.default is not MISSING:
            out[f.name] = f.default
        elif f.default_factory is not MISSING:
            out[f.name] = f.default_factory()
    return out


def _synthetic_value(key: str, raw: str):
    default = _defaults(SyntheticSpec)[key]
    return _parse(raw, default, f"[synthetic] {key}")


def read_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = set(SECTIONS) | {"data", "synthetic", "plan"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"{path}: unknown sections {sorted(extra)}; expected {sorted(known)}")
    return cp


def train_config_from(cp: configparser.ConfigParser, env: dict | None = None) -> TrainConfig:
    env = os.environ if env is None else env
    defaults = _defaults(TrainConfig)
    values = {}
    for section, keys in SECTIONS.items():
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            if key not in keys:
                raise ConfigError(f"[{section}] unknown key {key!r}; expected one of {list(keys)}")
            values[key] = _parse(raw, defaults[key], f"[{section}] {key}")
    if env.get(SEED_ENV):
        values["seed"] = _parse(env[SEED_ENV], 0, SEED_ENV)
    if values.get("modality") and "backbone" not in values:
        values["backbone"] = {"tabular": "integrated", "graph": "gcn", "text": "pooled"}.get(values["modality"], "")
    return TrainConfig(**values)


def data_config_from(cp: configparser.ConfigParser) -> DataConfig:
    defaults = _defaults(DataConfig)
    values = {}
    if cp.has_section("data"):
        for key, raw in cp.items("data"):
            if key not in defaults or key == "synthetic":
                raise ConfigError(f"[data] unknown key {key!r}")
            values[key] = _parse(raw, defaults[key], f"[data] {key}")
    if cp.has_section("synthetic"):
        known = set(_defaults(SyntheticSpec)) - {"modality"}
        synth = {}
        for key, raw in cp.items("synthetic"):
            if key not in known:
                raise ConfigError(f"[synthetic] unknown key {key!r}")
            synth[key] = _synthetic_value(key, raw)
        values["synthetic"] = synth
    return DataConfig(**values)


def plan_section_from(cp: configparser.ConfigParser) -> PlanSection:
    defaults = _defaults(PlanSection)
    values = {}
    if cp.has_section("plan"):
        for key, raw in cp.items("plan"):
            if key not in defaults:
                raise ConfigError(f"[plan] unknown key {key!r}")
            default = defaults[key] if key != "grid" else (0.0,)
            values[key] = _parse(raw, default, f"[plan] {key}")
    return PlanSection(**values)


def load_config(path, env: dict | None = None) -> tuple[TrainConfig, DataConfig]:
    cp = read_ini(path)
    return train_config_from(cp, env), data_config_from(cp)


def write_config(path, config: TrainConfig, data: DataConfig | None = None) -> Path:
    """Inverse of :func:`load_config` (every key written explicitly)."""
    cp = configparser.ConfigParser(interpolation=None)
    d = config.to_dict()
    for section, keys in SECTIONS.items():
        cp[section] = {k: _fmt(d[k]) for k in keys}
    if data is not None:
        dd = data.to_dict()
        synth = dd.pop("synthetic")
        cp["data"] = {k: _fmt(v) for k, v in dd.items()}
        if synth:
            cp["synthetic"] = {k: _fmt(v) for k, v in synth.items()}
    path = Path(path)
    with open(path, "w") as fh:
        cp.write(fh)
    return path


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)
