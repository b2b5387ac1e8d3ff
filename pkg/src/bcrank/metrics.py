# bcrank/metrics.py
"""Ranking metrics and the benchmark runner.

Kendall tau here is 2*(concordant - discordant) / (n*(n-1)): pairs tied in
either vector count as neither, while the denominator stays n*(n-1)/2
unordered pairs. `kendall_tau` counts in O(n log n) by merge-sort; the
definitional O(n^2) counter `kendall_tau_quadratic` is kept as its oracle
and the two must agree exactly (both form the same integer numerator).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .model import ModelParams, rank_scores

__all__ = [
    "top_n_percent_accuracy",
    "kendall_tau",
    "kendall_tau_quadratic",
    "rank_top_k",
    "GraphEval",
    "EvalReport",
    "run_benchmark",
]


def rank_top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Top-k node ids by descending score; ties broken by ascending id."""
    scores = np.asarray(scores)
    n = scores.size
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got k={k}")
    order = np.lexsort((np.arange(n), -scores))
    return order[:k]


def top_n_percent_accuracy(pred: np.ndarray, truth: np.ndarray, n_percent: float) -> float:
    """Overlap fraction between the predicted and true top-ceil(|V|*N%) sets."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"score vectors must match, got {pred.shape} and {truth.shape}")
    if not 0 < n_percent <= 100:
        raise ValueError(f"n_percent must be in (0, 100], got {n_percent}")
    k = math.ceil(pred.size * n_percent / 100.0)
    top_pred = set(rank_top_k(pred, k).tolist())
    top_truth = set(rank_top_k(truth, k).tolist())
    return len(top_pred & top_truth) / k


def _merge_count_inversions(values: np.ndarray) -> int:
    """Number of index pairs i < j with values[i] > values[j] (strict)."""
    values = list(values)
    buffer = [0.0] * len(values)
    total = 0

    def sort(lo: int, hi: int) -> None:
        nonlocal total
        if hi - lo <= 1:
            return
        mid = (lo + hi) // 2
        sort(lo, mid)
        sort(mid, hi)
        i, j, out = lo, mid, lo
        while i < mid and j < hi:
            if values[i] <= values[j]:
                buffer[out] = values[i]
                i += 1
            else:
                buffer[out] = values[j]
                j += 1
                total += mid - i
            out += 1
        while i < mid:
            buffer[out] = values[i]
            i += 1
            out += 1
        while j < hi:
            buffer[out] = values[j]
            j += 1
            out += 1
        values[lo:hi] = buffer[lo:hi]

    sort(0, len(values))
    return total


def _tie_pair_count(sorted_values: np.ndarray) -> int:
    total = 0
    run = 1
    for i in range(1, len(sorted_values)):
        if sorted_values[i] == sorted_values[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def kendall_tau(a: np.ndarray, b: np.ndarray) -> float:
    """Rank correlation 2*(concordant - discordant) / (n*(n-1)).

    O(n log n): sort by (a, b), count discordant pairs as merge-sort
    inversions of b, and correct for ties so that tied pairs count as
    neither concordant nor discordant.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"score vectors must match, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError("need at least two entries")
    perm = np.lexsort((b, a))
    a_sorted = a[perm]
    b_sorted = b[perm]
    n0 = n * (n - 1) // 2
    ties_a = _tie_pair_count(a_sorted)
    ties_b = _tie_pair_count(np.sort(b))
    joint = 0
    run = 1
    for i in range(1, n):
        if a_sorted[i] == a_sorted[i - 1] and b_sorted[i] == b_sorted[i - 1]:
            run += 1
        else:
            joint += run * (run - 1) // 2
            run = 1
    joint += run * (run - 1) // 2
    discordant_doubled = 2 * _merge_count_inversions(b_sorted)
    numerator = n0 - ties_a - ties_b + joint - discordant_doubled
    return 2.0 * numerator / (n * (n - 1))


def kendall_tau_quadratic(a: np.ndarray, b: np.ndarray) -> float:
    """Definitional O(n^2) concordant/discordant counter; test oracle."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"score vectors must match, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError("need at least two entries")
    concordant = discordant = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            prod = da * db
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    return 2.0 * (concordant - discordant) / (n * (n - 1))


# --------------------------------------------------------------------------
# Benchmark runner
# --------------------------------------------------------------------------


@dataclass
class GraphEval:
    graph_id: str
    nodes: int
    edges: int
    top1: float
    top5: float
    top10: float
    kendall: float
    inference_seconds: float
    exact_bc_seconds: float = float("nan")


@dataclass
class EvalReport:
    rows: list[GraphEval] = field(default_factory=list)

    COLUMNS = ("top1", "top5", "top10", "kendall", "inference_seconds", "exact_bc_seconds")

    def aggregate(self) -> dict[str, tuple[float, float]]:
        """Column -> (mean, population std) over all rows."""
        out: dict[str, tuple[float, float]] = {}
        for col in self.COLUMNS:
            vals = np.array([getattr(r, col) for r in self.rows], dtype=np.float64)
            out[col] = (float(np.mean(vals)), float(np.std(vals)))
        return out

    def to_csv(self, path: str) -> None:
        header = "graph_id,nodes,edges," + ",".join(self.COLUMNS)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for r in self.rows:
                cells = [r.graph_id, str(r.nodes), str(r.edges)]
                cells += [f"{getattr(r, col):.17g}" for col in self.COLUMNS]
                fh.write(",".join(cells) + "\n")
            agg = self.aggregate()
            fh.write("mean,,," + ",".join(f"{agg[c][0]:.17g}" for c in self.COLUMNS) + "\n")
            fh.write("std,,," + ",".join(f"{agg[c][1]:.17g}" for c in self.COLUMNS) + "\n")

    def render_table(self) -> str:
        """Aligned text table mirroring the CSV contents."""
        headers = ["graph", "|V|", "|E|", "top1%", "top5%", "top10%", "tau", "infer_s"]
        lines = ["  ".join(f"{h:>10}" for h in headers)]
        for r in self.rows:
            lines.append(
                "  ".join(
                    [
                        f"{r.graph_id:>10}",
                        f"{r.nodes:>10}",
                        f"{r.edges:>10}",
                        f"{r.top1:>10.4f}",
                        f"{r.top5:>10.4f}",
                        f"{r.top10:>10.4f}",
                        f"{r.kendall:>10.4f}",
                        f"{r.inference_seconds:>10.4f}",
                    ]
                )
            )
        agg = self.aggregate()
        lines.append(
            "  ".join(
                [f"{'mean':>10}", f"{'':>10}", f"{'':>10}"]
                + [f"{agg[c][0]:>10.4f}" for c in ("top1", "top5", "top10", "kendall", "inference_seconds")]
            )
        )
        lines.append(
            "  ".join(
                [f"{'std':>10}", f"{'':>10}", f"{'':>10}"]
                + [f"{agg[c][1]:>10.4f}" for c in ("top1", "top5", "top10", "kendall", "inference_seconds")]
            )
        )
        return "\n".join(lines)


def run_benchmark(
    model: ModelParams,
    graphs: list[Graph],
    truth: list[np.ndarray],
    layers: int,
    graph_ids: list[str] | None = None,
    exact_seconds: list[float] | None = None,
) -> EvalReport:
    """Score each graph, timing inference (forward + full ranking sort).

    Metric values are deterministic; only the timings vary run to run.
    """
    if len(graphs) != len(truth):
        raise ValueError(f"{len(graphs)} graphs but {len(truth)} truth vectors")
    if graph_ids is None:
        graph_ids = [f"g{i}" for i in range(len(graphs))]
    report = EvalReport()
    for idx, (g, bc) in enumerate(zip(graphs, truth)):
        if len(bc) != g.node_count:
            raise ValueError(f"graph {graph_ids[idx]}: truth has {len(bc)} scores for {g.node_count} nodes")
        t0 = time.perf_counter()
        scores = rank_scores(g, model, layers)
        rank_top_k(scores, g.node_count)
        elapsed = time.perf_counter() - t0
        report.rows.append(
            GraphEval(
                graph_id=graph_ids[idx],
                nodes=g.node_count,
                edges=g.edge_count,
                top1=top_n_percent_accuracy(scores, bc, 1.0),
                top5=top_n_percent_accuracy(scores, bc, 5.0),
                top10=top_n_percent_accuracy(scores, bc, 10.0),
                kendall=kendall_tau(scores, bc),
                inference_seconds=elapsed,
                exact_bc_seconds=exact_seconds[idx] if exact_seconds else float("nan"),
            )
        )
    return report
