"""Compressed Interaction Network.

Depth ``k`` takes the previous maps ``X^(k-1)`` (``H_{k-1} x D``) and the field
embeddings ``X0`` (``m x D``) and forms

    X^(k)[h] = sum_{i, j} W^(k)[h, i, j] * (X^(k-1)[i] * X0[j])

so the interaction carrier stays a D-vector while the polynomial order grows
by one per depth.  Weights are stored as one ``(H_k, H_{k-1}, m)`` array per
depth, or as factor pairs ``U (H_k, H_{k-1}, L)``, ``V (H_k, m, L)`` with
``W[h] = U[h] @ V[h].T``.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..numcore import Module, RngStream, ShapeError, Tensor
from ..numcore import ops


def _batched(x: Tensor) -> tuple[Tensor, bool]:
    if x.ndim == 2:
        return ops.reshape(x, (1,) + x.shape), True
    return x, False


def lowrank_weight(U: Tensor, V: Tensor) -> Tensor:
    """``W[h] = U[h] @ V[h]^T`` for every map ``h``."""
    return ops.matmul(U, ops.transpose(V, (0, 2, 1)))


def cin_layer(X_prev: Tensor, X0: Tensor, W) -> Tensor:
    """One CIN depth.  ``W`` is a ``(H_k, H_{k-1}, m)`` tensor or a ``(U, V)`` pair.

    Accepts unbatched ``(H, D)`` inputs or batched ``(B, H, D)`` inputs.
    """
    if isinstance(W, (tuple, list)):
        W = lowrank_weight(*W)
    W = ops.as_tensor(W)
    Xp, squeeze = _batched(ops.as_tensor(X_prev))
    X0b, _ = _batched(ops.as_tensor(X0))
    B, H_prev, D = Xp.shape
    m = X0b.shape[1]
    if X0b.shape[-1] != D:
        raise ShapeError(f"cin_layer: embedding widths differ, {Xp.shape} vs {X0b.shape}")
    if W.ndim != 3 or W.shape[1:] != (H_prev, m):
        raise ShapeError(f"cin_layer: weight shape {W.shape} incompatible with H_prev={H_prev}, m={m}")
    H_k = W.shape[0]
    # (B, H_prev, 1, D) * (B, 1, m, D) -> all pairwise Hadamard products
    outer = ops.reshape(Xp, (Xp.shape[0], H_prev, 1, D)) * ops.reshape(X0b, (X0b.shape[0], 1, m, D))
    outer = ops.reshape(outer, (outer.shape[0], H_prev * m, D))
    out = ops.matmul(ops.reshape(W, (H_k, H_prev * m)), outer)
    return ops.reshape(out, (H_k, D)) if squeeze else out


def cin_pool(Xk: Tensor) -> Tensor:
    """Sum over embedding coordinates: ``(…, H_k, D) -> (…, H_k)``."""
    return ops.sum(Xk, axis=-1)


def cin_concat(pooled: Sequence[Tensor]) -> Tensor:
    if len(pooled) == 0:
        raise ValueError("cin_concat needs at least one depth")
    return pooled[0] if len(pooled) == 1 else ops.concat(pooled, axis=-1)


def cin_only_predict(p_plus: Tensor, w_o: Tensor) -> Tensor:
    """CIN-only probability ``1 / (1 + exp(p+ . w_o))``; note the negative sign."""
    p_plus, w_o = ops.as_tensor(p_plus), ops.as_tensor(w_o)
    if p_plus.shape[-1] != w_o.shape[0]:
        raise ShapeError(f"cin_only_predict: p+ width {p_plus.shape[-1]} != w_o length {w_o.shape[0]}")
    score = ops.sum(p_plus * w_o, axis=-1)
    return ops.sigmoid(-score)


class CIN(Module):
    def __init__(self, m: int, widths: Sequence[int], rng: RngStream, lowrank: int | None = None,
                 init_scale: float | None = None):
        if not widths:
            raise ValueError("CIN needs at least one depth")
        self.m = int(m)
        self.widths = [int(h) for h in widths]
        self.lowrank = lowrank
        self.weights = []
        h_prev = self.m
        for h in self.widths:
            scale = init_scale if init_scale is not None else np.sqrt(1.0 / (h_prev * self.m))
            if lowrank:
                s = np.sqrt(scale / np.sqrt(lowrank))
                U = Tensor(rng.normal(0, s, size=(h, h_prev, lowrank)), requires_grad=True)
                V = Tensor(rng.normal(0, s, size=(h, self.m, lowrank)), requires_grad=True)
                self.weights.append((U, V))
            else:
                self.weights.append(Tensor(rng.normal(0, scale, size=(h, h_prev, self.m)), requires_grad=True))
            h_prev = h

    @property
    def out_dim(self) -> int:
        return sum(self.widths)

    def params_at_depth(self, k: int) -> int:
        """Parameter count of depth ``k`` (1-based)."""
        w = self.weights[k - 1]
        return sum(t.size for t in w) if isinstance(w, tuple) else w.size

    def maps(self, X0: Tensor) -> list[Tensor]:
        X = X0
        out = []
        for W in self.weights:
            X = cin_layer(X, X0, W)
            out.append(X)
        return out

    def __call__(self, X0: Tensor) -> Tensor:
        return cin_concat([cin_pool(X) for X in self.maps(X0)])


def cin_polynomial_oracle(X0, weights, depth: int) -> np.ndarray:
    """Depth-``depth`` maps by explicit enumeration of every index chain.

    ``X^(k)[h]`` expands to a sum over field chains ``(j_0, j_1, ..., j_k)`` and
    intermediate map indices ``(i_1, ..., i_{k-1})`` of the product of one
    weight entry per depth times the Hadamard product of ``k + 1`` field
    vectors.  No matrix algebra is used, so this checks :func:`cin_layer`
    independently.  Sizes are capped because the sum is exponential in depth.
    """
    X0 = np.asarray(X0, dtype=np.float64)
    m, D = X0.shape
    if m > 4 or D > 3 or depth > 3:
        raise ValueError(f"oracle limited to m<=4, D<=3, depth<=3; got m={m}, D={D}, depth={depth}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    Ws = []
    for W in weights[:depth]:
        if isinstance(W, (tuple, list)):
            U, V = (np.asarray(getattr(t, "data", t)) for t in W)
            W = np.einsum("hil,hjl->hij", U, V)
        Ws.append(np.asarray(getattr(W, "data", W), dtype=np.float64))
    widths = [m] + [W.shape[0] for W in Ws]

    out = np.zeros((widths[depth], D))
    for h in range(widths[depth]):
        for j_chain in itertools.product(range(m), repeat=depth + 1):
            for i_chain in itertools.product(*(range(widths[t]) for t in range(1, depth))):
                # map index entering depth t: j_0 at t=1, then i_{t-1}; leaving: i_t, last is h
                entering = (j_chain[0],) + i_chain
                leaving = i_chain + (h,)
                coef = 1.0
                for t in range(depth):
                    coef *= Ws[t][leaving[t], entering[t], j_chain[t + 1]]
                if coef == 0.0:
                    continue
                vec = np.ones(D)
                for j in j_chain:
                    vec = vec * X0[j]
                out[h] += coef * vec
    return out
