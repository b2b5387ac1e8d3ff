# bcrank/exact.py
"""Exact betweenness centrality and a sampled-source estimator.

The normalized BC of node w is the fraction of all-pairs shortest paths
passing through w, divided by |V|(|V|-1) with each unordered pair counted
in both directions, so every value lies in [0, 1].

`brandes_bc` is the production path (one BFS per source plus reverse
dependency accumulation, compiled with numba). `brute_force_bc` computes
the same quantity by explicitly enumerating every shortest path and exists
as an independent test oracle; the two must never share code.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from .graph import Graph

__all__ = [
    "brandes_bc",
    "brute_force_bc",
    "sampled_source_bc",
    "save_bc_scores",
    "load_bc_scores",
]


@njit(cache=True, nogil=True)
def _accumulate_sources(indptr, indices, sources):  # pragma: no cover - jitted
    """Sum of source dependencies delta_u.(w) over the given sources.

    Per source: BFS for distances and shortest-path counts sigma, then the
    reverse pass delta[v] += sigma[v]/sigma[w] * (1 + delta[w]) over each
    edge (v, w) with dist[v] = dist[w] - 1. Sigma is kept in float64; exact
    integer counts overflow on large graphs.
    """
    n = indptr.size - 1
    acc = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    for si in range(sources.size):
        s = sources[si]
        for i in range(n):
            dist[i] = -1
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            sv = sigma[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sv
        for idx in range(tail - 1, 0, -1):
            w = order[idx]
            coeff = (1.0 + delta[w]) / sigma[w]
            dw = dist[w]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            acc[w] += delta[w]
    return acc


def _run_sources(g: Graph, sources: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1 or sources.size < 2 * threads:
        return _accumulate_sources(g.indptr, g.indices, sources)
    chunks = np.array_split(sources, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _accumulate_sources(g.indptr, g.indices, c), chunks))
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def brandes_bc(g: Graph, threads: int = 1) -> np.ndarray:
    """Exact normalized BC of every node.

    Graphs with fewer than two nodes have no pairs and score all zeros.
    With threads > 1, sources are split across worker threads and the
    per-thread accumulators summed; results agree across thread counts up
    to floating-point associativity.
    """
    n = g.node_count
    if n < 2:
        return np.zeros(n, dtype=np.float64)
    sources = np.arange(n, dtype=np.int64)
    acc = _run_sources(g, sources, threads)
    return acc / (n * (n - 1))


def sampled_source_bc(g: Graph, k: int, seed: int, threads: int = 1) -> np.ndarray:
    """BC estimate from k uniformly sampled distinct sources.

    Accumulated dependencies are scaled by |V|/k before normalization, so
    k = |V| reproduces `brandes_bc` exactly.
    """
    n = g.node_count
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= |V|, got k={k}, |V|={n}")
    if n < 2:
        return np.zeros(n, dtype=np.float64)
    rng = np.random.default_rng(seed)
    sources = np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)
    acc = _run_sources(g, sources, threads)
    return acc * (n / k) / (n * (n - 1))


# --------------------------------------------------------------------------
# Brute-force oracle: explicit shortest-path enumeration
# --------------------------------------------------------------------------


def _bfs_distances(g: Graph, source: int) -> list[int]:
    dist = [-1] * g.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(int(w))
    return dist


def brute_force_bc(g: Graph, max_nodes: int = 64) -> np.ndarray:
    """Normalized BC by enumerating every shortest path of every ordered pair.

    Exponentially expensive; guarded by max_nodes. This is the definitional
    oracle against which brandes_bc is verified.
    """
    n = g.node_count
    if n > max_nodes:
        raise ValueError(f"graph too large for brute force: {n} > {max_nodes} nodes")
    if n < 2:
        return np.zeros(n, dtype=np.float64)
    raw = np.zeros(n, dtype=np.float64)
    for u in range(n):
        dist = _bfs_distances(g, u)
        # memoized list of all shortest u->x paths, built shallow-to-deep
        paths: dict[int, list[tuple[int, ...]]] = {u: [(u,)]}
        by_depth = sorted((d, x) for x, d in enumerate(dist) if d > 0)
        for _, x in by_depth:
            found: list[tuple[int, ...]] = []
            for w in g.neighbors(x):
                if dist[w] == dist[x] - 1:
                    found.extend(p + (x,) for p in paths[int(w)])
            paths[x] = found
        for v, d in enumerate(dist):
            if v == u or d <= 0:
                continue
            enumerated = paths[v]
            weight = 1.0 / len(enumerated)
            for path in enumerated:
                for w in path[1:-1]:
                    raw[w] += weight
    return raw / (n * (n - 1))


# --------------------------------------------------------------------------
# BC score file: one line per node "node_id score", 17 significant digits
# --------------------------------------------------------------------------


def save_bc_scores(
    path: str,
    scores: np.ndarray,
    node_ids: np.ndarray | None = None,
    seconds: float | None = None,
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if seconds is not None:
            fh.write(f"# exact_bc_seconds {seconds:.6f}\n")
        ids = node_ids if node_ids is not None else range(len(scores))
        for i, s in zip(ids, scores):
            fh.write(f"{i} {s:.17g}\n")


def load_bc_scores(path: str) -> tuple[np.ndarray, np.ndarray, float | None]:
    """Return (node_ids, scores, recorded_seconds_or_None)."""
    ids: list[int] = []
    vals: list[float] = []
    seconds: float | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                fields = text[1:].split()
                if len(fields) == 2 and fields[0] == "exact_bc_seconds":
                    seconds = float(fields[1])
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node_id score'")
            ids.append(int(parts[0]))
            vals.append(float(parts[1]))
    return np.array(ids, dtype=np.int64), np.array(vals, dtype=np.float64), seconds


def align_scores(ids: np.ndarray, values: np.ndarray, original_ids: np.ndarray) -> np.ndarray:
    """Reorder a loaded score file to compact node order.

    `original_ids` comes from load_edge_list; every compact node must have
    a score line.
    """
    lookup = {int(i): float(v) for i, v in zip(ids, values)}
    try:
        return np.array([lookup[int(o)] for o in original_ids], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"score file is missing node id {exc.args[0]}") from exc
