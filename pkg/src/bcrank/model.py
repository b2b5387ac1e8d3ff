# bcrank/model.py
"""Encoder-decoder ranking model.

The encoder stacks L rounds of degree-normalized neighbor propagation
combined through a GRU cell, L2-normalizes each layer's rows, and max-pools
coordinate-wise across layers into the node embedding z_v. The decoder is a
two-layer MLP collapsing z_v to a scalar ranking score. Row-vector
convention throughout: matrices multiply on the right, so a (c,p) matrix
maps feature rows to embedding rows.

Parameter count is independent of the graph, so a model trained on small
graphs applies unchanged to arbitrarily large ones.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .graph import Graph, initial_features
from .kernels import propagate_neighbors, relu, row_l2_normalize, sigmoid

__all__ = [
    "ModelParams",
    "ModelMeta",
    "ForwardCache",
    "ModelFormatError",
    "init_params",
    "gru_cell",
    "encode",
    "decode",
    "forward",
    "embed",
    "rank_scores",
    "save_model",
    "load_model",
    "export_embeddings",
]

PARAM_NAMES = ("W0", "W1", "U1", "W2", "U2", "W3", "U3", "W4", "W5")


class ModelFormatError(ValueError):
    """Raised when a model file is malformed or incompatible."""


@dataclass
class ModelParams:
    """Learnable weights.

    Shapes: W0 (c,p) input transform; W1,U1 update gate, W2,U2 reset gate,
    W3,U3 candidate, all (p,p); W4 (p,q) and W5 (q,) decoder MLP.
    """

    W0: np.ndarray
    W1: np.ndarray
    U1: np.ndarray
    W2: np.ndarray
    U2: np.ndarray
    W3: np.ndarray
    U3: np.ndarray
    W4: np.ndarray
    W5: np.ndarray

    @property
    def feature_dim(self) -> int:
        return self.W0.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.W0.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W4.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: a.copy() for k, a in self.as_dict().items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams(**{k: np.zeros_like(a) for k, a in self.as_dict().items()})


@dataclass(frozen=True)
class ModelMeta:
    c: int
    p: int
    q: int
    L: int
    version: int = 1


def init_params(c: int, p: int, q: int, seed: int) -> ModelParams:
    """Glorot-uniform initialization, deterministic per seed.

    Each matrix is drawn from U[-a, a] with a = sqrt(6 / (fan_in + fan_out)).
    """
    if min(c, p, q) < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)

    def draw(fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=shape)

    return ModelParams(
        W0=draw(c, p, (c, p)),
        W1=draw(p, p, (p, p)),
        U1=draw(p, p, (p, p)),
        W2=draw(p, p, (p, p)),
        U2=draw(p, p, (p, p)),
        W3=draw(p, p, (p, p)),
        U3=draw(p, p, (p, p)),
        W4=draw(p, q, (p, q)),
        W5=draw(q, 1, (q,)),
    )


def gru_cell(
    h_prev: np.ndarray, h_nbr: np.ndarray, params: ModelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gated combine of a node's previous state with its aggregated neighborhood.

    Returns (h_new, u, r, f): update gate u, reset gate r, candidate f, with
    h_new = u * f + (1 - u) * h_prev applied row-wise.
    """
    p = params.embedding_dim
    if h_prev.shape != h_nbr.shape or h_prev.ndim != 2 or h_prev.shape[1] != p:
        raise ValueError(
            f"expected matching |V| x {p} inputs, got {h_prev.shape} and {h_nbr.shape}"
        )
    u = sigmoid(h_nbr @ params.W1 + h_prev @ params.U1)
    r = sigmoid(h_nbr @ params.W2 + h_prev @ params.U2)
    f = np.tanh(h_nbr @ params.W3 + (r * h_prev) @ params.U3)
    h_new = u * f + (1.0 - u) * h_prev
    return h_new, u, r, f


@dataclass
class ForwardCache:
    """Every intermediate needed to backpropagate through one forward pass."""

    layers: int
    h0: np.ndarray  # |V| x c input features
    prenorm: list[np.ndarray]  # pre-normalization value of each layer, 1..L
    h: list[np.ndarray]  # post-normalization h^(l), 1..L
    h_nbr: list[np.ndarray]  # aggregated neighborhoods, layers 2..L
    u: list[np.ndarray]  # gate activations, layers 2..L
    r: list[np.ndarray]
    f: list[np.ndarray]
    z: np.ndarray  # |V| x p max-pooled embedding
    dec_pre: np.ndarray  # |V| x q decoder hidden pre-activation
    scores: np.ndarray  # |V| ranking scores


def encode(g: Graph, params: ModelParams, layers: int) -> tuple[np.ndarray, ForwardCache]:
    """Embed every node; returns (z, cache) with all intermediates retained."""
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")
    h0 = initial_features(g)
    if h0.shape[1] != params.feature_dim:
        raise ValueError(
            f"graph features have dim {h0.shape[1]}, model expects {params.feature_dim}"
        )
    pre1 = relu(h0 @ params.W0)
    h1 = row_l2_normalize(pre1)
    prenorm = [pre1]
    hs = [h1]
    h_nbrs: list[np.ndarray] = []
    us: list[np.ndarray] = []
    rs: list[np.ndarray] = []
    fs: list[np.ndarray] = []
    h = h1
    for _ in range(2, layers + 1):
        h_nbr = propagate_neighbors(g, h)
        h_raw, u, r, f = gru_cell(h, h_nbr, params)
        h = row_l2_normalize(h_raw)
        h_nbrs.append(h_nbr)
        prenorm.append(h_raw)
        hs.append(h)
        us.append(u)
        rs.append(r)
        fs.append(f)
    z = hs[0].copy()
    for hl in hs[1:]:
        np.maximum(z, hl, out=z)
    cache = ForwardCache(
        layers=layers,
        h0=h0,
        prenorm=prenorm,
        h=hs,
        h_nbr=h_nbrs,
        u=us,
        r=rs,
        f=fs,
        z=z,
        dec_pre=np.empty(0),
        scores=np.empty(0),
    )
    return z, cache


def decode(z: np.ndarray, params: ModelParams) -> np.ndarray:
    """Collapse embeddings to scalar ranking scores: y = relu(z W4) . W5."""
    if z.ndim != 2 or z.shape[1] != params.embedding_dim:
        raise ValueError(
            f"embedding dim {z.shape[1] if z.ndim == 2 else z.shape} != model p={params.embedding_dim}"
        )
    return relu(z @ params.W4) @ params.W5


def forward(g: Graph, params: ModelParams, layers: int) -> tuple[np.ndarray, ForwardCache]:
    """encode + decode with the full cache kept for backpropagation."""
    z, cache = encode(g, params, layers)
    dec_pre = z @ params.W4
    scores = relu(dec_pre) @ params.W5
    cache.dec_pre = dec_pre
    cache.scores = scores
    return scores, cache


def embed(g: Graph, params: ModelParams, layers: int) -> np.ndarray:
    """Embedding matrix only, discarding intermediates as it goes.

    Same z as encode()[0]; peak memory stays at a few |V| x p arrays, which
    matters on 100k-node graphs.
    """
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")
    h = row_l2_normalize(relu(initial_features(g) @ params.W0))
    z = h.copy()
    for _ in range(2, layers + 1):
        h_nbr = propagate_neighbors(g, h)
        h, _, _, _ = gru_cell(h, h_nbr, params)
        h = row_l2_normalize(h)
        np.maximum(z, h, out=z)
    return z


def rank_scores(g: Graph, params: ModelParams, layers: int) -> np.ndarray:
    """Scores only; the memory-lean equivalent of forward()[0]."""
    return decode(embed(g, params, layers), params)


# --------------------------------------------------------------------------
# Model file format
#
#   drbc-model v1 <c> <p> <q> <L>
#   <name> <rows> <cols>
#   ... rows lines of cols decimals (17 significant digits) ...
#
# in the fixed block order W0 W1 U1 W2 U2 W3 U3 W4 W5; W5 is one 1 x q row.
# 17 significant digits round-trip float64 exactly.
# --------------------------------------------------------------------------

MODEL_MAGIC = "drbc-model"
MODEL_VERSION = "v1"


def save_model(params: ModelParams, meta: ModelMeta, path: str) -> None:
    expected = {
        "W0": (meta.c, meta.p),
        "W1": (meta.p, meta.p),
        "U1": (meta.p, meta.p),
        "W2": (meta.p, meta.p),
        "U2": (meta.p, meta.p),
        "W3": (meta.p, meta.p),
        "U3": (meta.p, meta.p),
        "W4": (meta.p, meta.q),
        "W5": (1, meta.q),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION} {meta.c} {meta.p} {meta.q} {meta.L}\n")
        for name in PARAM_NAMES:
            arr = np.atleast_2d(params.as_dict()[name])
            if arr.shape != expected[name]:
                raise ModelFormatError(
                    f"block {name}: shape {arr.shape} inconsistent with header {expected[name]}"
                )
            fh.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_model(path: str) -> tuple[ModelParams, ModelMeta]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    header = lines[0].split()
    if len(header) != 6 or header[0] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad header)")
    if header[1] != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {header[1]!r}, expected {MODEL_VERSION}")
    try:
        c, p, q, layers = (int(x) for x in header[2:])
    except ValueError as exc:
        raise ModelFormatError(f"{path}: non-integer dimensions in header") from exc
    expected = {
        "W0": (c, p),
        "W1": (p, p),
        "U1": (p, p),
        "W2": (p, p),
        "U2": (p, p),
        "W3": (p, p),
        "U3": (p, p),
        "W4": (p, q),
        "W5": (1, q),
    }
    arrays: dict[str, np.ndarray] = {}
    pos = 1
    for name in PARAM_NAMES:
        if pos >= len(lines):
            raise ModelFormatError(f"{path}: truncated file, missing block {name}")
        head = lines[pos].split()
        if len(head) != 3 or head[0] != name:
            raise ModelFormatError(f"{path}: expected block {name} at line {pos + 1}")
        rows, cols = int(head[1]), int(head[2])
        if (rows, cols) != expected[name]:
            raise ModelFormatError(
                f"{path}: block {name} has shape ({rows},{cols}), header implies {expected[name]}"
            )
        pos += 1
        if pos + rows > len(lines):
            raise ModelFormatError(f"{path}: truncated file inside block {name}")
        block = np.empty((rows, cols), dtype=np.float64)
        for i in range(rows):
            vals = lines[pos + i].split()
            if len(vals) != cols:
                raise ModelFormatError(
                    f"{path}: block {name} row {i} has {len(vals)} values, expected {cols}"
                )
            block[i] = [float(x) for x in vals]
        pos += rows
        arrays[name] = block
    arrays["W5"] = arrays["W5"].reshape(q)
    return ModelParams(**arrays), ModelMeta(c=c, p=p, q=q, L=layers)


def export_embeddings(z: np.ndarray, path: str, node_ids: np.ndarray | None = None) -> None:
    """CSV with header node,z0,...,z{p-1}, one row per node."""
    p = z.shape[1]
    ids = node_ids if node_ids is not None else range(z.shape[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node," + ",".join(f"z{k}" for k in range(p)) + "\n")
        for i, row in zip(ids, z):
            fh.write(f"{i}," + ",".join(f"{x:.17g}" for x in row) + "\n")
