# bcrank/train.py
"""Pairwise ranking loss, exact gradients, and the episode training loop.

Training follows a draw-label-fit cycle: sample a batch of random graphs,
compute their exact BC as labels, run the model forward on the disjoint
union, sample node pairs within each graph, and take one Adam step on the
summed pairwise cross-entropy. Gradients are hand-derived reverse-mode
through the decoder, the layer max-pool, the GRU stack, the neighbor
propagation (self-adjoint, so its transpose is itself) and the row
normalization; `gradient_check` verifies them against central differences.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, fields, replace

import numpy as np

from .exact import brandes_bc
from .graph import Graph, disjoint_union, gen_barabasi_albert, gen_erdos_renyi, gen_powerlaw_cluster
from .kernels import NORM_EPS, AdamState, adam_step, propagate_neighbors, sigmoid
from .metrics import top_n_percent_accuracy
from .model import ForwardCache, ModelParams, forward, init_params, rank_scores

__all__ = [
    "PairBatch",
    "TrainConfig",
    "HistoryPoint",
    "NumericError",
    "sample_pairs",
    "pairwise_ranking_loss",
    "backward_gradients",
    "gradient_check",
    "train",
    "parse_config_file",
    "build_config",
    "history_to_csv",
]

# Ground-truth transform applied before pair labels: raw normalized BC
# differences shrink toward zero as graphs grow, which saturates the label
# sigmoid at 1/2 and starves the gradient. log(b + offset) is strictly
# monotone, so every pairwise order relation is preserved.
LABEL_LOG_OFFSET = 1e-8


class NumericError(RuntimeError):
    """Raised when a numeric invariant breaks (NaN scores, diverged loss)."""


@dataclass
class PairBatch:
    """Node-index pairs with soft ground-truth order labels in (0, 1)."""

    src: np.ndarray
    dst: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.src.size

    def shifted(self, offset: int) -> "PairBatch":
        return PairBatch(self.src + offset, self.dst + offset, self.labels)

    @staticmethod
    def concat(batches: list["PairBatch"]) -> "PairBatch":
        return PairBatch(
            np.concatenate([b.src for b in batches]),
            np.concatenate([b.dst for b in batches]),
            np.concatenate([b.labels for b in batches]),
        )


def sample_pairs(
    n: int, factor: int, bc: np.ndarray, seed: int | np.random.Generator
) -> PairBatch:
    """factor * n source/target pairs drawn uniformly with replacement.

    Pairs with identical endpoints are redrawn. The label of (i, j) is
    sigmoid(log-transformed BC difference), 0.5 when the two BC values tie.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes to form pairs, got {n}")
    if factor < 1:
        raise ValueError(f"pair factor must be >= 1, got {factor}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    count = factor * n
    src = rng.integers(0, n, size=count)
    dst = rng.integers(0, n, size=count)
    clash = src == dst
    while clash.any():
        k = int(clash.sum())
        src[clash] = rng.integers(0, n, size=k)
        dst[clash] = rng.integers(0, n, size=k)
        clash = src == dst
    transformed = np.log(np.asarray(bc, dtype=np.float64) + LABEL_LOG_OFFSET)
    labels = sigmoid(transformed[src] - transformed[dst])
    return PairBatch(src.astype(np.int64), dst.astype(np.int64), labels)


def pairwise_ranking_loss(scores: np.ndarray, batch: PairBatch) -> float:
    """Sum over pairs of binary cross-entropy on the score difference.

    Evaluated in logits form (softplus), so large |differences| neither
    overflow nor lose the linear tail.
    """
    if not np.isfinite(scores).all():
        raise NumericError("non-finite ranking scores")
    d = scores[batch.src] - scores[batch.dst]
    # -log sigmoid(d) = softplus(-d);  -log(1 - sigmoid(d)) = softplus(d)
    return float(np.sum(batch.labels * np.logaddexp(0.0, -d) + (1.0 - batch.labels) * np.logaddexp(0.0, d)))


def _loss_grad_scores(scores: np.ndarray, batch: PairBatch) -> np.ndarray:
    """dLoss/dscore: per pair sigmoid(d) - label, scattered to both endpoints."""
    d = scores[batch.src] - scores[batch.dst]
    dd = sigmoid(d) - batch.labels
    grad = np.zeros_like(scores)
    np.add.at(grad, batch.src, dd)
    np.add.at(grad, batch.dst, -dd)
    return grad


def _normalize_backward(pre: np.ndarray, post: np.ndarray, grad_post: np.ndarray) -> np.ndarray:
    """Backward through row L2 normalization post = pre / max(||pre||, eps)."""
    norms = np.linalg.norm(pre, axis=1, keepdims=True)
    safe = np.maximum(norms, NORM_EPS)
    proj = np.sum(post * grad_post, axis=1, keepdims=True)
    dx = (grad_post - post * proj) / safe
    # rows at or below eps were scaled by the constant 1/eps instead
    small = norms <= NORM_EPS
    if small.any():
        dx = np.where(small, grad_post / NORM_EPS, dx)
    return dx


def backward_gradients(
    cache: ForwardCache, batch: PairBatch, params: ModelParams, g: Graph
) -> ModelParams:
    """Exact gradient of pairwise_ranking_loss w.r.t. every parameter matrix."""
    n = g.node_count
    if cache.scores.size != n or cache.h0.shape[0] != n:
        raise ValueError("cache does not match graph: node counts differ")
    if cache.h[0].shape[1] != params.embedding_dim:
        raise ValueError("cache does not match params: embedding dims differ")
    grads = params.zeros_like()
    L = cache.layers

    dy = _loss_grad_scores(cache.scores, batch)

    # decoder: scores = relu(z W4) . W5
    hidden = np.maximum(cache.dec_pre, 0.0)
    grads.W5 = hidden.T @ dy
    dhidden = dy[:, None] * params.W5[None, :]
    dpre = dhidden * (cache.dec_pre > 0)
    grads.W4 = cache.z.T @ dpre
    dz = dpre @ params.W4.T

    # layer max-pool: route each coordinate's gradient to the first layer
    # attaining the max (lowest index on ties)
    stacked = np.stack(cache.h)
    route = np.argmax(stacked, axis=0)
    grad_h = [dz * (route == li) for li in range(L)]

    for l in range(L, 1, -1):
        li = l - 1
        dh_raw = _normalize_backward(cache.prenorm[li], cache.h[li], grad_h[li])
        h_prev = cache.h[li - 1]
        h_nbr = cache.h_nbr[li - 1]
        u = cache.u[li - 1]
        r = cache.r[li - 1]
        f = cache.f[li - 1]

        du = dh_raw * (f - h_prev)
        df = dh_raw * u
        dh_prev = dh_raw * (1.0 - u)

        da_f = df * (1.0 - f * f)
        grads.W3 += h_nbr.T @ da_f
        rh = r * h_prev
        grads.U3 += rh.T @ da_f
        d_rh = da_f @ params.U3.T
        dr = d_rh * h_prev
        dh_prev += d_rh * r
        dh_nbr = da_f @ params.W3.T

        da_r = dr * r * (1.0 - r)
        grads.W2 += h_nbr.T @ da_r
        grads.U2 += h_prev.T @ da_r
        dh_nbr += da_r @ params.W2.T
        dh_prev += da_r @ params.U2.T

        da_u = du * u * (1.0 - u)
        grads.W1 += h_nbr.T @ da_u
        grads.U1 += h_prev.T @ da_u
        dh_nbr += da_u @ params.W1.T
        dh_prev += da_u @ params.U1.T

        # the degree-normalized propagation is symmetric, hence self-adjoint
        dh_prev += propagate_neighbors(g, dh_nbr)
        grad_h[li - 1] += dh_prev

    dpre1 = _normalize_backward(cache.prenorm[0], cache.h[0], grad_h[0])
    dpre1 *= cache.prenorm[0] > 0  # relu mask; prenorm[0] is already rectified
    grads.W0 = cache.h0.T @ dpre1
    return grads


def gradient_check(
    g: Graph,
    params: ModelParams,
    batch: PairBatch,
    h: float = 1e-5,
    tol: float = 1e-4,
    layers: int = 3,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Exhausts every parameter coordinate; O(#params * forward), so keep the
    dimensions small. `tol` is the caller's pass threshold and is returned
    unused by the computation itself.
    """
    del tol
    scores, cache = forward(g, params, layers)
    analytic = backward_gradients(cache, batch, params, g)

    def loss_at(p: ModelParams) -> float:
        return pairwise_ranking_loss(rank_scores(g, p, layers), batch)

    worst = 0.0
    for name, arr in params.as_dict().items():
        grad = analytic.as_dict()[name]
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + h
            plus = loss_at(params)
            flat[idx] = keep - h
            minus = loss_at(params)
            flat[idx] = keep
            numeric = (plus - minus) / (2.0 * h)
            denom = max(abs(gflat[idx]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[idx] - numeric) / denom)
    return worst


# --------------------------------------------------------------------------
# Training configuration and loop
# --------------------------------------------------------------------------


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    embedding_dim: int = 128
    decoder_hidden: int = 64
    layers: int = 5
    batch_graphs: int = 16
    pair_factor: int = 5
    max_episodes: int = 10000
    validation_interval: int = 100
    patience: int = 10
    graph_model: str = "plc"  # plc | er | ba
    n_min: int = 100
    n_max: int = 200
    gen_m: int = 4  # edges per new node (plc/ba)
    gen_p: float = 0.05  # triangle probability (plc) or edge probability (er)
    val_graphs: int = 100
    pool_size: int = 0  # 0: fresh graphs every episode; >0: fixed pregenerated pool
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in (
            "embedding_dim",
            "decoder_hidden",
            "layers",
            "batch_graphs",
            "pair_factor",
            "validation_interval",
            "patience",
            "val_graphs",
            "threads",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_episodes < 0:
            raise ValueError("max_episodes must be >= 0")
        if self.pool_size < 0:
            raise ValueError("pool_size must be >= 0")
        if not 2 <= self.n_min <= self.n_max:
            raise ValueError("need 2 <= n_min <= n_max")
        if self.graph_model not in ("plc", "er", "ba"):
            raise ValueError(f"unknown graph model {self.graph_model!r}")


@dataclass
class HistoryPoint:
    iteration: int
    loss: float
    val_top1: float
    seconds: float


def _draw_graph(cfg: TrainConfig, rng: np.random.Generator) -> Graph:
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    seed = int(rng.integers(0, 2**63 - 1))
    if cfg.graph_model == "plc":
        return gen_powerlaw_cluster(n, cfg.gen_m, cfg.gen_p, seed)
    if cfg.graph_model == "ba":
        return gen_barabasi_albert(n, cfg.gen_m, seed)
    return gen_erdos_renyi(n, cfg.gen_p, seed)


def _labeled(cfg: TrainConfig, rng: np.random.Generator) -> tuple[Graph, np.ndarray]:
    g = _draw_graph(cfg, rng)
    return g, brandes_bc(g, threads=cfg.threads)


def train(cfg: TrainConfig) -> tuple[ModelParams, list[HistoryPoint]]:
    """Run the episode loop; returns (best-validation params, history).

    Each episode draws `batch_graphs` graphs, labels them with exact BC,
    forwards the disjoint union, samples pairs within each graph, and takes
    one Adam step on the summed loss. Every `validation_interval` episodes
    the mean top-1% accuracy on a fixed held-out set is recorded; training
    stops at `max_episodes` or after `patience` validations without
    improvement. Fully deterministic for a fixed seed.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    params = init_params(3, cfg.embedding_dim, cfg.decoder_hidden, seed=int(rng.integers(2**63 - 1)))
    state = AdamState.for_params(params.as_dict())

    val_set = [_labeled(cfg, rng) for _ in range(cfg.val_graphs)]
    pool = [_labeled(cfg, rng) for _ in range(cfg.pool_size)] if cfg.pool_size else None

    history: list[HistoryPoint] = []
    best: ModelParams | None = None
    best_val = -np.inf
    stale = 0
    start = time.perf_counter()

    for episode in range(1, cfg.max_episodes + 1):
        if pool is not None:
            picks = rng.integers(0, len(pool), size=cfg.batch_graphs)
            labeled = [pool[int(i)] for i in picks]
        else:
            labeled = [_labeled(cfg, rng) for _ in range(cfg.batch_graphs)]
        graphs = [g for g, _ in labeled]
        union, offsets = disjoint_union(graphs)
        scores, cache = forward(union, params, cfg.layers)
        batch = PairBatch.concat(
            [
                sample_pairs(g.node_count, cfg.pair_factor, bc, rng).shifted(int(off))
                for (g, bc), off in zip(labeled, offsets)
            ]
        )
        loss = pairwise_ranking_loss(scores, batch)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss at episode {episode}")
        grads = backward_gradients(cache, batch, params, union)
        adam_step(params.as_dict(), grads.as_dict(), state, cfg.learning_rate)

        if episode % cfg.validation_interval == 0 or episode == cfg.max_episodes:
            val_acc = float(
                np.mean(
                    [
                        top_n_percent_accuracy(rank_scores(g, params, cfg.layers), bc, 1.0)
                        for g, bc in val_set
                    ]
                )
            )
            history.append(
                HistoryPoint(episode, loss, val_acc, time.perf_counter() - start)
            )
            if val_acc > best_val:
                best_val = val_acc
                best = params.copy()
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break

    return (best if best is not None else params.copy()), history


# --------------------------------------------------------------------------
# Config files ("key = value" lines) and history CSV
# --------------------------------------------------------------------------


def parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = text.partition("=")
            values[key.strip()] = value.strip()
    return values


def build_config(*value_maps: dict[str, str | int | float]) -> TrainConfig:
    """Fold key/value maps onto the defaults; later maps win.

    Values are coerced to the declared field types; unknown keys are errors.
    """
    by_name = {f.name: f.type for f in fields(TrainConfig)}
    cfg = TrainConfig()
    for values in value_maps:
        casts: dict[str, object] = {}
        for key, raw in values.items():
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            kind = by_name[key]
            if kind in ("int", int):
                casts[key] = int(raw)
            elif kind in ("float", float):
                casts[key] = float(raw)
            else:
                casts[key] = str(raw)
        cfg = replace(cfg, **casts)
    return cfg


def history_to_csv(history: list[HistoryPoint], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,loss,val_top1,seconds\n")
        for pt in history:
            fh.write(f"{pt.iteration},{pt.loss:.17g},{pt.val_top1:.17g},{pt.seconds:.6f}\n")
