"""Minimal float64 tensor numerics: reverse-mode tape, Adam, counter-based RNG."""
from . import tensor as ops
from .gradcheck import finite_diff_check
from .module import Linear, Module, glorot
from .optim import Adam, AdamState, ParamGroup, adam_step
from .rng import RngStream, mix_seed
from .tensor import ComputeTape, ShapeError, Tensor, as_tensor, backward, no_grad

__all__ = [
    "Adam", "AdamState", "ComputeTape", "Linear", "Module", "glorot", "ParamGroup", "RngStream", "ShapeError",
    "Tensor", "adam_step", "as_tensor", "backward", "finite_diff_check", "mix_seed",
    "no_grad", "ops",
]
