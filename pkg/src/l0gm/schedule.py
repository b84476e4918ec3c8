"""Warm-up and hardening schedules for the penalty weight and gate temperature."""
from __future__ import annotations

from dataclasses import asdict, dataclass

ANNEALED = "annealed"
FIXED = "fixed"


@dataclass(frozen=True)
class AnnealSpec:
    total_steps: int
    warmup_frac: float = 0.1
    tau_start: float = 2.0
    tau_end: float = 0.5
    lambda_target: float = 1e-3
    mode: str = ANNEALED
    # independent switches so the ablation can anneal one knob and fix the other
    anneal_lambda: bool = True
    anneal_tau: bool = True

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be positive, got {self.total_steps}")
        if not 0 < self.warmup_frac < 1:
            raise ValueError(f"warmup_frac must lie in (0, 1), got {self.warmup_frac}")
        if self.tau_start <= 0 or self.tau_end <= 0:
            raise ValueError("temperatures must be positive")
        if self.lambda_target < 0:
            raise ValueError(f"lambda_target must be non-negative, got {self.lambda_target}")
        if self.mode not in (ANNEALED, FIXED):
            raise ValueError(f"mode must be '{ANNEALED}' or '{FIXED}', got {self.mode!r}")
        if self.mode == ANNEALED and self.anneal_tau and self.tau_start < self.tau_end:
            raise ValueError("annealed temperature must not increase (tau_start >= tau_end)")

    @property
    def warmup_steps(self) -> float:
        return self.warmup_frac * self.total_steps

    def to_dict(self) -> dict:
        return asdict(self)


def _check_step(spec: AnnealSpec, t: int) -> None:
    if not 0 <= t <= spec.total_steps:
        raise ValueError(f"step {t} outside [0, {spec.total_steps}]")


def lambda_at(spec: AnnealSpec, t: int) -> float:
    _check_step(spec, t)
    if spec.mode == FIXED or not spec.anneal_lambda:
        return spec.lambda_target
    return spec.lambda_target * min(1.0, t / spec.warmup_steps)


def tau_at(spec: AnnealSpec, t: int) -> float:
    _check_step(spec, t)
    if spec.mode == FIXED or not spec.anneal_tau:
        return spec.tau_start
    if t == spec.total_steps:
        return spec.tau_end
    return spec.tau_start * (spec.tau_end / spec.tau_start) ** (t / spec.total_steps)
