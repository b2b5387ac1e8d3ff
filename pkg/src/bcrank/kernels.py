# bcrank/kernels.py
"""Dense/sparse numeric kernels shared by the model and the trainer.

Everything here is a pure function over float64 numpy arrays. The neighbor
propagation is the only graph-aware kernel: it applies the degree-normalized
adjacency in O(|E|) without materializing a normalized matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph import Graph

__all__ = [
    "sigmoid",
    "relu",
    "row_l2_normalize",
    "propagate_neighbors",
    "AdamState",
    "adam_step",
]

NORM_EPS = 1e-12


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (never exponentiates positives)."""
    return expit(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def row_l2_normalize(h: np.ndarray, eps: float = NORM_EPS) -> np.ndarray:
    """Divide each row by max(||row||_2, eps); zero rows stay zero."""
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    return h / np.maximum(norms, eps)


def propagate_neighbors(g: Graph, h: np.ndarray) -> np.ndarray:
    """Degree-normalized neighbor sum.

    out[v] = sum_{j in N(v)} h[j] / (sqrt(d_v + 1) * sqrt(d_j + 1));
    isolated nodes get the zero row. Linear and permutation-equivariant.
    """
    if h.ndim != 2 or h.shape[0] != g.node_count:
        raise ValueError(f"feature matrix has {h.shape[0]} rows, graph has {g.node_count} nodes")
    inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
    scaled = h * inv_sqrt[:, None]
    return inv_sqrt[:, None] * (g.adjacency_csr @ scaled)


@dataclass
class AdamState:
    """First/second-moment accumulators, one pair per named parameter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.items()},
            v={k: np.zeros_like(a) for k, a in params.items()},
            t=0,
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """One Adam update with bias correction, in place on `params`."""
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ValueError("params, grads and state must share the same parameter names")
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, p in params.items():
        grad = grads[name]
        if grad.shape != p.shape:
            raise ValueError(f"gradient shape {grad.shape} != param shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return state
