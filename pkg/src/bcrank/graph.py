# bcrank/graph.py
from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "EdgeListParseError",
    "LoadedEdgeList",
    "gen_powerlaw_cluster",
    "gen_erdos_renyi",
    "gen_barabasi_albert",
    "load_edge_list",
    "save_edge_list",
    "initial_features",
    "disjoint_union",
]


class EdgeListParseError(ValueError):
    """Raised when an edge-list file contains a line that cannot be parsed."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph in compressed adjacency (CSR) form.

    Attributes
    ----------
    indptr : (|V|+1,) int64
        Offsets into `indices`; the neighbors of node v are
        `indices[indptr[v]:indptr[v+1]]`, strictly ascending.
    indices : (2|E|,) int64
        Concatenated neighbor lists. Symmetric: j appears under i iff
        i appears under j. No self-loops, no duplicates.
    """

    indptr: np.ndarray
    indices: np.ndarray

    @property
    def node_count(self) -> int:
        return self.indptr.size - 1

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.flags.writeable = False
        return d

    @cached_property
    def adjacency_csr(self) -> sp.csr_matrix:
        """0/1 adjacency as a scipy CSR matrix sharing this graph's arrays."""
        n = self.node_count
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edges(self) -> Iterable[tuple[int, int]]:
        """Yield each undirected edge once as (i, j) with i < j, sorted."""
        for i in range(self.node_count):
            for j in self.neighbors(v=i):
                if i < j:
                    yield (i, int(j))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node v renamed to perm[v]; same topology."""
        perm = np.asarray(perm, dtype=np.int64)
        if perm.size != self.node_count or np.any(np.sort(perm) != np.arange(self.node_count)):
            raise ValueError("perm must be a permutation of 0..|V|-1")
        pairs = [(perm[i], perm[j]) for i, j in self.edges()]
        return from_edge_pairs(self.node_count, pairs)

    def check_invariants(self) -> None:
        """Assert the structural invariants; for tests and loaders."""
        n = self.node_count
        assert self.indptr[0] == 0 and self.indptr[-1] == self.indices.size
        assert np.all(np.diff(self.indptr) >= 0)
        seen = set()
        for i in range(n):
            row = self.neighbors(i)
            assert np.all(row >= 0) and np.all(row < n), "neighbor id out of range"
            assert np.all(np.diff(row) > 0), "neighbor list not strictly ascending"
            assert i not in row, "self-loop"
            for j in row:
                seen.add((i, int(j)))
        for i, j in seen:
            assert (j, i) in seen, "asymmetric adjacency"
        assert int(self.degrees.sum()) == 2 * self.edge_count


def from_edge_pairs(n: int, pairs: Iterable[tuple[int, int]]) -> Graph:
    """Build a Graph from undirected edge pairs.

    Duplicates (in either orientation) collapse to one edge; self-loops are
    rejected here (callers that tolerate them must filter first).
    """
    uniq: set[tuple[int, int]] = set()
    for u, v in pairs:
        if u == v:
            raise ValueError(f"self-loop ({u},{v}) not allowed")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) out of range for n={n}")
        uniq.add((u, v) if u < v else (v, u))
    if not uniq:
        indptr = np.zeros(n + 1, dtype=np.int64)
        return Graph(_frozen(indptr), _frozen(np.empty(0, dtype=np.int64)))
    arr = np.array(sorted(uniq), dtype=np.int64)
    both = np.concatenate([arr, arr[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Graph(_frozen(indptr), _frozen(both[:, 1].copy()))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def disjoint_union(graphs: Sequence[Graph]) -> tuple[Graph, np.ndarray]:
    """Concatenate graphs with shifted node ids.

    Returns the union graph and the node-id offset of each input graph;
    graph k occupies ids offsets[k] .. offsets[k] + |V_k| - 1.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    sizes = np.array([g.node_count for g in graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    indptr_parts = [graphs[0].indptr]
    index_parts = [graphs[0].indices]
    edge_base = graphs[0].indices.size
    for g, off in zip(graphs[1:], offsets[1:]):
        indptr_parts.append(g.indptr[1:] + edge_base)
        index_parts.append(g.indices + off)
        edge_base += g.indices.size
    return (
        Graph(_frozen(np.concatenate(indptr_parts)), _frozen(np.concatenate(index_parts))),
        offsets,
    )


# --------------------------------------------------------------------------
# Random-graph generators
#
# All three use a private random.Random(seed) stream, so a fixed seed gives
# a bit-identical graph on every run and no global RNG state is touched.
# --------------------------------------------------------------------------


def _draw_new_target(rng: random.Random, pool: list[int], taboo: set[int], source: int) -> int:
    """Preferential-attachment draw from `pool`, rejecting repeats.

    Rejects `source` itself and anything already in `taboo` (the source's
    current neighbors), so every accepted draw creates a new edge.
    """
    while True:
        t = pool[int(rng.random() * len(pool))]
        if t != source and t not in taboo:
            return t


def gen_powerlaw_cluster(n: int, m: int, p: float, seed: int) -> Graph:
    """Growing scale-free graph with tunable clustering (Holme-Kim).

    Starts from m isolated seed nodes. Each arriving node attaches exactly
    m edges: the first by preferential attachment, each subsequent one with
    probability p by closing a triangle on the latest attachment target,
    otherwise by preferential attachment again. All m edges are distinct,
    so the result always has (n - m) * m edges.

    Parameters
    ----------
    n, m : int
        Node count and edges per arriving node; requires n > m >= 1.
    p : float
        Triangle-closure probability in [0, 1].
    seed : int
        RNG seed; fixed seed gives a bit-identical graph.
    """
    if m < 1 or n <= m:
        raise ValueError(f"need n > m >= 1, got n={n}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"triangle probability must be in [0,1], got {p}")
    rng = random.Random(seed)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    pool = list(range(m))  # each seed node once; then one entry per edge endpoint
    for source in range(m, n):
        target = _draw_new_target(rng, pool, nbrs[source], source)
        nbrs[source].add(target)
        nbrs[target].add(source)
        pool.append(target)
        count = 1
        while count < m:
            if rng.random() < p:
                # close a triangle on the latest preferential-attachment target
                candidates = [w for w in sorted(nbrs[target]) if w != source and w not in nbrs[source]]
                if candidates:
                    w = candidates[int(rng.random() * len(candidates))]
                    nbrs[source].add(w)
                    nbrs[w].add(source)
                    pool.append(w)
                    count += 1
                    continue
            target = _draw_new_target(rng, pool, nbrs[source], source)
            nbrs[source].add(target)
            nbrs[target].add(source)
            pool.append(target)
            count += 1
        pool.extend([source] * m)
    return _from_neighbor_sets(n, nbrs)


def gen_barabasi_albert(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment graph; (n - m) * m edges, deterministic per seed."""
    if m < 1 or n <= m:
        raise ValueError(f"need n > m >= 1, got n={n}, m={m}")
    rng = random.Random(seed)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    targets = list(range(m))  # first arrival connects to every seed node
    pool: list[int] = []
    for source in range(m, n):
        for t in targets:
            nbrs[source].add(t)
            nbrs[t].add(source)
        pool.extend(targets)
        pool.extend([source] * m)
        if source + 1 < n:
            drawn: set[int] = set()
            while len(drawn) < m:
                drawn.add(pool[int(rng.random() * len(pool))])
            targets = sorted(drawn)
    return _from_neighbor_sets(n, nbrs)


def gen_erdos_renyi(n: int, p_edge: float, seed: int) -> Graph:
    """G(n, p): every unordered pair is an edge independently with prob p_edge."""
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    if not 0.0 <= p_edge <= 1.0:
        raise ValueError(f"edge probability must be in [0,1], got {p_edge}")
    rng = random.Random(seed)
    pairs = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p_edge
    ]
    return from_edge_pairs(n, pairs)


def _from_neighbor_sets(n: int, nbrs: list[set[int]]) -> Graph:
    indptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        indptr[v + 1] = indptr[v] + len(nbrs[v])
    indices = np.empty(indptr[-1], dtype=np.int64)
    for v in range(n):
        indices[indptr[v] : indptr[v + 1]] = sorted(nbrs[v])
    return Graph(_frozen(indptr), _frozen(indices))


# --------------------------------------------------------------------------
# Edge-list file I/O
#
# Text format: one "i j" pair per line, '#' starts a comment line, UTF-8,
# '\n' endings. save_edge_list writes a "# nodes N" comment so graphs with
# isolated nodes survive a round-trip; load_edge_list honors it when present
# and otherwise compacts whatever ids it finds.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadedEdgeList:
    """Result of load_edge_list: the graph plus id bookkeeping."""

    graph: Graph
    original_ids: np.ndarray  # original_ids[k] = external id of compact node k
    self_loops_dropped: int


def load_edge_list(path: str) -> LoadedEdgeList:
    """Read an undirected simple graph from an edge-list text file.

    Duplicate lines and reversed duplicates collapse to one edge. Self-loop
    lines are dropped (counted, not errors). Node ids are compacted to
    0..|V|-1 in ascending order of the original ids unless a "# nodes N"
    header pins a dense id space.
    """
    declared_n: int | None = None
    raw_pairs: list[tuple[int, int]] = []
    self_loops = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                fields = text[1:].split()
                if len(fields) == 2 and fields[0] == "nodes" and fields[1].isdigit():
                    declared_n = int(fields[1])
                continue
            parts = text.split()
            if len(parts) != 2:
                raise EdgeListParseError(
                    f"{path}:{lineno}: expected two node ids, got {len(parts)} fields"
                )
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise EdgeListParseError(f"{path}:{lineno}: non-integer node id") from exc
            if u < 0 or v < 0:
                raise EdgeListParseError(f"{path}:{lineno}: negative node id")
            if u == v:
                self_loops += 1
                continue
            raw_pairs.append((u, v))

    if declared_n is not None:
        for u, v in raw_pairs:
            if u >= declared_n or v >= declared_n:
                raise EdgeListParseError(
                    f"{path}: node id exceeds declared node count {declared_n}"
                )
        graph = from_edge_pairs(declared_n, raw_pairs)
        ids = np.arange(declared_n, dtype=np.int64)
        return LoadedEdgeList(graph, _frozen(ids), self_loops)

    originals = sorted({u for e in raw_pairs for u in e})
    compact = {orig: k for k, orig in enumerate(originals)}
    graph = from_edge_pairs(len(originals), [(compact[u], compact[v]) for u, v in raw_pairs])
    ids = np.array(originals, dtype=np.int64)
    return LoadedEdgeList(graph, _frozen(ids), self_loops)


def save_edge_list(g: Graph, path: str) -> None:
    """Write one "i j" line per undirected edge with i < j.

    load_edge_list(save_edge_list(g)) reproduces g exactly.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# nodes {g.node_count}\n")
        for i, j in g.edges():
            fh.write(f"{i} {j}\n")


def initial_features(g: Graph) -> np.ndarray:
    """Per-node input features: row v = [degree(v), 1, 1], float64."""
    n = g.node_count
    feats = np.ones((n, 3), dtype=np.float64)
    feats[:, 0] = g.degrees
    return feats
