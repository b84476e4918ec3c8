"""Test-time perturbation family and the fixed 13-condition protocol grid."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .numcore import RngStream

KINDS = ("iid", "missingness", "gaussian", "quantize", "occlusion")
INPUT = "input"
INTERFACE = "interface"

MISSINGNESS_P = (0.1, 0.3, 0.5)
GAUSSIAN_SIGMA = (0.05, 0.10, 0.20)
QUANTIZE_BITS = (8, 6, 4)
OCCLUSION_FRAC = (0.1, 0.2, 0.3)


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    param: float | None = None
    target: str = INTERFACE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}; expected one of {KINDS}")
        if self.target not in (INPUT, INTERFACE):
            raise ValueError(f"target must be '{INPUT}' or '{INTERFACE}', got {self.target!r}")
        if self.kind != "iid" and self.param is None:
            raise ValueError(f"{self.kind} needs a parameter")
        if self.kind == "quantize" and self.param < 1:
            raise ValueError(f"quantize needs at least 1 bit, got {self.param}")
        if self.kind in ("missingness", "occlusion") and not 0 <= self.param <= 1:
            raise ValueError(f"{self.kind} fraction must lie in [0, 1], got {self.param}")
        if self.kind == "gaussian" and self.param < 0:
            raise ValueError(f"gaussian sigma fraction must be non-negative, got {self.param}")

    @property
    def label(self) -> str:
        if self.kind == "iid":
            return "iid"
        p = int(self.param) if self.kind == "quantize" else self.param
        return f"{self.kind}:{p}"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_label(cls, label: str, target: str = INTERFACE) -> "PerturbationSpec":
        if label == "iid":
            return cls("iid", target=target)
        kind, _, param = label.partition(":")
        return cls(kind, float(param), target)


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature statistics of the clean batch, frozen before perturbing."""

    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray

    @classmethod
    def of(cls, batch) -> "FeatureStats":
        x = np.asarray(batch, dtype=np.float64)
        x = x.reshape(-1, x.shape[-1])
        return cls(x.mean(0), x.std(0), x.min(0), x.max(0))


def protocol_grid(target: str = INTERFACE) -> list[PerturbationSpec]:
    """The i.i.d. condition followed by the 12 fixed perturbed conditions."""
    grid = [PerturbationSpec("iid", target=target)]
    grid += [PerturbationSpec("missingness", p, target) for p in MISSINGNESS_P]
    grid += [PerturbationSpec("gaussian", s, target) for s in GAUSSIAN_SIGMA]
    grid += [PerturbationSpec("quantize", float(b), target) for b in QUANTIZE_BITS]
    grid += [PerturbationSpec("occlusion", r, target) for r in OCCLUSION_FRAC]
    return grid


def quantize(x: np.ndarray, bits: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Round to the nearest of ``2**bits`` evenly spaced levels over ``[lo, hi]`` per feature."""
    levels = 2 ** int(bits) - 1
    span = np.where(hi > lo, hi - lo, 1.0)
    q = np.rint((np.clip(x, lo, hi) - lo) / span * levels)
    out = lo + q / levels * span
    return np.where(hi > lo, out, x)


def occlusion_mask(n: int, dim: int, frac: float, rng: RngStream) -> np.ndarray:
    """One contiguous zero block of ``ceil(frac * dim)`` entries per row; start uniform."""
    width = min(dim, math.ceil(frac * dim - 1e-12))
    keep = np.ones((n, dim))
    if width == 0:
        return keep
    starts = rng.integers(0, dim - width + 1, size=n)
    cols = np.arange(dim)[None, :]
    keep[(cols >= starts[:, None]) & (cols < starts[:, None] + width)] = 0.0
    return keep


def apply_perturbation(batch, spec: PerturbationSpec, stats: FeatureStats | None, rng: RngStream) -> np.ndarray:
    """Perturb a ``(n, dim)`` batch; returns a new array, the input is untouched."""
    x = np.array(batch, dtype=np.float64)
    if spec.kind == "iid":
        return x
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D batch, got shape {x.shape}")
    n, dim = x.shape
    if spec.kind == "missingness":
        return x * (rng.random((n, dim)) >= spec.param)
    if spec.kind == "occlusion":
        return x * occlusion_mask(n, dim, spec.param, rng)
    stats = stats if stats is not None else FeatureStats.of(x)
    if spec.kind == "gaussian":
        return x + rng.normal(size=(n, dim)) * (spec.param * stats.std)
    if spec.kind == "quantize":
        return quantize(x, int(spec.param), stats.min, stats.max)
    raise ValueError(f"unknown perturbation kind {spec.kind!r}")


def perturb_indices(rows, spec: PerturbationSpec, rng: RngStream, missing_index: int = 0) -> np.ndarray:
    """Input-level perturbation of categorical field indices.

    Masked fields take the reserved missing index.  Only masking kinds are
    meaningful on categorical inputs.
    """
    rows = np.array(rows)
    if spec.kind == "iid":
        return rows
    n, m = rows.shape
    if spec.kind == "missingness":
        keep = rng.random((n, m)) >= spec.param
    elif spec.kind == "occlusion":
        keep = occlusion_mask(n, m, spec.param, rng) > 0
    else:
        raise ValueError(f"{spec.kind} is undefined on categorical inputs; target the interface instead")
    return np.where(keep, rows, missing_index)


def condition_rng(seed: int, spec: PerturbationSpec) -> RngStream:
    """Stream for one (seed, condition) pair, independent of the evaluated model."""
    return RngStream(seed).derive("perturb", spec.label, spec.target)
