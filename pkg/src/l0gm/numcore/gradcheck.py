from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor, backward, no_grad


def finite_diff_check(f: Callable[[Tensor], Tensor], x, h: float = 1e-5) -> float:
    """Max relative error between the tape gradient of ``f`` and central differences.

    The error per coordinate is ``|analytic - numeric| / (|analytic| + 1e-12)``.
    A trainable ``Tensor`` (e.g. a model parameter that ``f`` closes over) is
    perturbed in place and restored afterwards; anything else is copied.
    """
    if isinstance(x, Tensor) and x.requires_grad:
        leaf = x
        x0 = leaf.data = np.array(leaf.data, dtype=np.float64)
        leaf.grad = None
    else:
        x0 = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
        leaf = Tensor(x0, requires_grad=True)
    out = f(leaf)
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("finite_diff_check: f is not finite at x")
    backward(out)
    analytic = leaf.grad.copy() if leaf.grad is not None else np.zeros_like(x0)
    leaf.grad = None
    probe = leaf if leaf is x else None

    numeric = np.empty_like(x0)
    flat = x0.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(probe if probe is not None else Tensor(x0)).item()
            flat[i] = orig - h
            fm = f(probe if probe is not None else Tensor(x0)).item()
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"finite_diff_check: f is not finite near coordinate {i}")
            numeric.reshape(-1)[i] = (fp - fm) / (2.0 * h)
    err = np.abs(analytic - numeric) / (np.abs(analytic) + 1e-12)
    return float(err.max()) if err.size else 0.0
