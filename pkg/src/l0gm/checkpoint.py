"""Checkpoint container: an ``.npz`` archive of float64 tensors plus a JSON header.

Layout (format ``l0gm-checkpoint``, version 1):

* ``param/<dotted.name>`` - one array per model parameter, stored bit-exact;
* ``meta`` - UTF-8 JSON as a ``uint8`` array with keys ``format``,
  ``version``, ``config`` (the training config echo), ``task_meta`` (shapes
  needed to rebuild the model), ``gate_constants``, ``bucketizer``
  (numeric-field boundaries or null), ``dataset_hash`` and ``seed``.

Readers accept any file with the same major version.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .backbones.base import GatedModel
from .datasets import Bucketizer
from .numcore import RngStream
from .trainer import TrainConfig, build_model

FORMAT = "l0gm-checkpoint"
VERSION = 1
PREFIX = "param/"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: GatedModel, config: TrainConfig, task_meta: dict,
                    bucketizer: Bucketizer | None = None, dataset_hash: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "config": config.to_dict(),
        "task_meta": task_meta,
        "gate_constants": [g.constants() for g in model.gates()],
        "bucketizer": bucketizer.to_dict() if bucketizer is not None else None,
        "dataset_hash": dataset_hash,
        "seed": config.seed,
    }
    arrays = {PREFIX + k: v for k, v in model.state_dict().items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_meta(path) -> dict:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(bytes(z["meta"]).decode())
    except (OSError, KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from None
    if meta.get("format") != FORMAT:
        raise CheckpointError(f"{path}: unknown format {meta.get('format')!r}")
    if int(meta.get("version", -1)) != VERSION:
        raise CheckpointError(f"{path}: version {meta.get('version')} is not readable by version {VERSION}")
    return meta


def load_checkpoint(path) -> tuple[GatedModel, dict]:
    """Rebuild the model and return it with the checkpoint header."""
    meta = read_meta(path)
    config = TrainConfig.from_dict(meta["config"])
    model = build_model(config, meta["task_meta"], RngStream(config.seed).derive("init"))
    with np.load(path, allow_pickle=False) as z:
        state = {k[len(PREFIX):]: z[k] for k in z.files if k.startswith(PREFIX)}
    try:
        model.load_state_dict(state)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: parameters do not fit the recorded config ({exc})") from None
    return model, meta
