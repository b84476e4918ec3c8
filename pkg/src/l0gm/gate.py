"""Hard-concrete L0 gates for a representation interface.

Training draws a stretched, clipped binary-concrete sample per gated
dimension; inference thresholds ``sigmoid(alpha)`` at ``pi``.  The expected
number of non-zero gates has a closed form that serves as the L0 penalty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numcore import RngStream, Tensor
from .numcore.module import Module
from .numcore import ops

NOISE_EPS = 1e-6


@dataclass
class GateParams:
    alpha: Tensor
    gamma: float = -0.1
    zeta: float = 1.1
    pi: float = 0.5

    def __post_init__(self):
        if not (self.gamma < 0 < 1 < self.zeta):
            raise ValueError(f"need gamma < 0 < 1 < zeta, got gamma={self.gamma}, zeta={self.zeta}")
        if not 0 < self.pi < 1:
            raise ValueError(f"threshold pi must lie in (0, 1), got {self.pi}")
        if not np.all(np.isfinite(self.alpha.data)):
            raise ValueError("gate logits must be finite")

    @classmethod
    def init(cls, dim: int, rng: RngStream, mean: float = 2.0, std: float = 0.01, **consts) -> "GateParams":
        alpha = Tensor(rng.normal(mean, std, size=dim), requires_grad=True, name="gate.alpha")
        return cls(alpha, **consts)

    @property
    def dim(self) -> int:
        return self.alpha.size


@dataclass
class GateSample:
    z: Tensor
    u: np.ndarray | None = field(default=None, repr=False)


def sample_gate_train(gp: GateParams, tau: float, rng: RngStream | None = None,
                      u: np.ndarray | None = None) -> GateSample:
    """Reparameterized hard-concrete draw; gradients flow to ``gp.alpha``."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    if u is None:
        if rng is None:
            raise ValueError("sample_gate_train needs an RngStream or explicit noise u")
        u = rng.uniform(NOISE_EPS, 1.0 - NOISE_EPS, size=gp.alpha.shape)
    u = np.asarray(u, dtype=np.float64)
    logit_u = np.log(u) - np.log1p(-u)
    s = ops.sigmoid((gp.alpha + logit_u) * (1.0 / tau))
    z = ops.clip(s * (gp.zeta - gp.gamma) + gp.gamma, 0.0, 1.0)
    return GateSample(z, u)


def inference_mask(gp: GateParams) -> np.ndarray:
    return (ops._stable_sigmoid(gp.alpha.data) > gp.pi).astype(np.float64)


def gate_infer(gp: GateParams) -> GateSample:
    return GateSample(Tensor(inference_mask(gp)))


def expected_l0(gp: GateParams, tau: float) -> Tensor:
    """Sum over dimensions of P(z_j > 0) under the hard-concrete distribution."""
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    if gp.gamma >= 0 or gp.zeta <= 0:
        raise ValueError("expected_l0 needs gamma < 0 and zeta > 0")
    shift = tau * math.log(-gp.gamma / gp.zeta)
    return ops.sum(ops.sigmoid(gp.alpha - shift))


def expected_density(gp: GateParams, tau: float) -> float:
    """Mean P(z_j > 0); logged next to the thresholded active fraction."""
    return expected_l0(gp, tau).item() / gp.dim


def apply_gate(r: Tensor, z: GateSample | Tensor) -> Tensor:
    zt = z.z if isinstance(z, GateSample) else z
    if r.shape[-1] != zt.shape[-1]:
        raise ValueError(f"apply_gate: representation width {r.shape[-1]} != gate dimension {zt.shape[-1]}")
    return r * zt


def active_fraction(gp: GateParams) -> float:
    if gp.dim == 0:
        raise ValueError("active_fraction of an empty gate")
    return float(inference_mask(gp).mean())


class Gate(Module):
    """One gate per attached interface: parameters plus the train/infer switch."""

    def __init__(self, dim: int, rng: RngStream, init_mean: float = 2.0, init_std: float = 0.01,
                 gamma: float = -0.1, zeta: float = 1.1, pi: float = 0.5):
        self.params = GateParams.init(dim, rng, init_mean, init_std, gamma=gamma, zeta=zeta, pi=pi)

    @property
    def alpha(self) -> Tensor:
        return self.params.alpha

    @property
    def dim(self) -> int:
        return self.params.dim

    def sample(self, training: bool, tau: float = 1.0, rng: RngStream | None = None) -> GateSample:
        return sample_gate_train(self.params, tau, rng) if training else gate_infer(self.params)

    def __call__(self, r: Tensor, training: bool, tau: float = 1.0, rng: RngStream | None = None) -> Tensor:
        return apply_gate(r, self.sample(training, tau, rng))

    def penalty(self, tau: float) -> Tensor:
        return expected_l0(self.params, tau)

    def active_fraction(self) -> float:
        return active_fraction(self.params)

    def constants(self) -> dict:
        p = self.params
        return {"gamma": p.gamma, "zeta": p.zeta, "pi": p.pi}
