# bcrank/cli.py
"""Command-line entry point.

Subcommands compose through files only (edge lists, BC score files, model
files, CSV reports); progress goes to stderr, data to files or stdout.
Exit codes: 0 success, 1 usage error (bad flags, missing inputs), 2 runtime
error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import exact, graph, metrics, model, train

__all__ = ["run_cli", "main"]


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise _UsageError(f"no such file: {path}")


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcrank",
        description="Generate graphs, compute exact betweenness centrality, "
        "train the ranking model, and evaluate it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a random graph as an edge list")
    p_gen.add_argument("--model", required=True, choices=("plc", "er", "ba"))
    p_gen.add_argument("--n", type=int, required=True, help="node count")
    p_gen.add_argument("--m", type=int, default=4, help="edges per new node (plc/ba)")
    p_gen.add_argument(
        "--p", type=float, default=0.05, help="triangle probability (plc) or edge probability (er)"
    )
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output edge-list path")

    p_exact = sub.add_parser("exact", help="exact BC scores for a graph file")
    p_exact.add_argument("--graph", required=True)
    p_exact.add_argument("--out", required=True, help="output BC score file")
    p_exact.add_argument("--brute", action="store_true", help="use the enumeration oracle (small graphs)")
    p_exact.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p_train = sub.add_parser("train", help="train a model; flags override the config file")
    p_train.add_argument("--config", help="key = value config file")
    p_train.add_argument("--out-model", required=True)
    p_train.add_argument("--history", help="training history CSV path")
    for fname in (
        "learning_rate",
        "embedding_dim",
        "decoder_hidden",
        "layers",
        "batch_graphs",
        "pair_factor",
        "max_episodes",
        "validation_interval",
        "patience",
        "graph_model",
        "n_min",
        "n_max",
        "gen_m",
        "gen_p",
        "val_graphs",
        "pool_size",
        "seed",
        "threads",
    ):
        p_train.add_argument(f"--{fname.replace('_', '-')}", dest=fname, default=None)

    p_rank = sub.add_parser("rank", help="rank nodes of a graph with a trained model")
    p_rank.add_argument("--model", required=True)
    p_rank.add_argument("--graph", required=True)
    p_rank.add_argument("--top-k", type=int, required=True)
    p_rank.add_argument("--export-embeddings", help="also write the embedding matrix CSV here")
    p_rank.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p_eval = sub.add_parser("eval", help="accuracy report of a model against ground truth")
    _add_eval_args(p_eval)

    p_bench = sub.add_parser(
        "bench", help="eval plus timing and a sampled-source estimator comparison column"
    )
    _add_eval_args(p_bench)
    p_bench.add_argument(
        "--sample-k",
        type=int,
        default=0,
        help="sources for the sampled estimator (default: 5%% of nodes)",
    )

    return parser


def _add_eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True)
    p.add_argument("--graphs", nargs="+", required=True, help="edge-list files or one directory")
    p.add_argument("--truth", nargs="+", required=True, help="BC score files or one directory")
    p.add_argument("--report", required=True, help="output CSV path")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _set_blas_threads(threads: int) -> None:
    # honored by BLAS backends loaded afterwards; best effort otherwise
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.model == "plc":
        g = graph.gen_powerlaw_cluster(args.n, args.m, args.p, args.seed)
    elif args.model == "ba":
        g = graph.gen_barabasi_albert(args.n, args.m, args.seed)
    else:
        g = graph.gen_erdos_renyi(args.n, args.p, args.seed)
    graph.save_edge_list(g, args.out)
    _progress(f"wrote {g.node_count} nodes / {g.edge_count} edges to {args.out}")
    return 0


def _cmd_exact(args: argparse.Namespace) -> int:
    _require_file(args.graph)
    loaded = graph.load_edge_list(args.graph)
    if loaded.self_loops_dropped:
        _progress(f"dropped {loaded.self_loops_dropped} self-loop line(s)")
    t0 = time.perf_counter()
    if args.brute:
        scores = exact.brute_force_bc(loaded.graph)
    else:
        scores = exact.brandes_bc(loaded.graph, threads=args.threads)
    elapsed = time.perf_counter() - t0
    exact.save_bc_scores(args.out, scores, node_ids=loaded.original_ids, seconds=elapsed)
    _progress(f"exact BC of {loaded.graph.node_count} nodes in {elapsed:.3f}s -> {args.out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    maps: list[dict[str, str]] = []
    if args.config:
        _require_file(args.config)
        maps.append(train.parse_config_file(args.config))
    overrides = {
        name: getattr(args, name)
        for name in (
            "learning_rate",
            "embedding_dim",
            "decoder_hidden",
            "layers",
            "batch_graphs",
            "pair_factor",
            "max_episodes",
            "validation_interval",
            "patience",
            "graph_model",
            "n_min",
            "n_max",
            "gen_m",
            "gen_p",
            "val_graphs",
            "pool_size",
            "seed",
            "threads",
        )
        if getattr(args, name) is not None
    }
    maps.append(overrides)
    try:
        cfg = train.build_config(*maps)
        cfg.validate()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    _progress(f"training: {cfg}")
    params, history = train.train(cfg)
    meta = model.ModelMeta(c=3, p=cfg.embedding_dim, q=cfg.decoder_hidden, L=cfg.layers)
    model.save_model(params, meta, args.out_model)
    _progress(f"model -> {args.out_model}")
    if args.history:
        train.history_to_csv(history, args.history)
        _progress(f"history -> {args.history}")
    if history:
        _progress(f"best validation top-1%: {max(h.val_top1 for h in history):.4f}")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    _require_file(args.model)
    _require_file(args.graph)
    if args.top_k < 1:
        raise _UsageError(f"--top-k must be >= 1, got {args.top_k}")
    params, meta = model.load_model(args.model)
    loaded = graph.load_edge_list(args.graph)
    if args.top_k > loaded.graph.node_count:
        raise _UsageError(f"--top-k {args.top_k} exceeds node count {loaded.graph.node_count}")
    t0 = time.perf_counter()
    if args.export_embeddings:
        z = model.embed(loaded.graph, params, meta.L)
        scores = model.decode(z, params)
    else:
        scores = model.rank_scores(loaded.graph, params, meta.L)
    top = metrics.rank_top_k(scores, args.top_k)
    elapsed = time.perf_counter() - t0
    _progress(f"ranked {loaded.graph.node_count} nodes in {elapsed:.3f}s")
    for pos, node in enumerate(top, start=1):
        print(f"{pos} {loaded.original_ids[node]} {scores[node]:.17g}")
    if args.export_embeddings:
        model.export_embeddings(z, args.export_embeddings, node_ids=loaded.original_ids)
        _progress(f"embeddings -> {args.export_embeddings}")
    return 0


def _resolve_graph_paths(raw: list[str]) -> list[Path]:
    if len(raw) == 1 and os.path.isdir(raw[0]):
        paths = sorted(Path(raw[0]).glob("*.txt"))
        if not paths:
            raise _UsageError(f"no *.txt edge lists in directory {raw[0]}")
        return paths
    paths = [Path(p) for p in raw]
    for p in paths:
        if not p.is_file():
            raise _UsageError(f"no such file: {p}")
    return paths


def _resolve_truth_paths(raw: list[str], graph_paths: list[Path]) -> list[Path]:
    if len(raw) == 1 and os.path.isdir(raw[0]):
        root = Path(raw[0])
        out = []
        for gp in graph_paths:
            for candidate in (root / f"{gp.stem}.bc", root / gp.name, root / f"{gp.stem}.txt"):
                if candidate.is_file():
                    out.append(candidate)
                    break
            else:
                raise _UsageError(f"no truth file for {gp.name} in {root}")
        return out
    if len(raw) != len(graph_paths):
        raise _UsageError(f"{len(graph_paths)} graphs but {len(raw)} truth files")
    paths = [Path(p) for p in raw]
    for p in paths:
        if not p.is_file():
            raise _UsageError(f"no such file: {p}")
    return paths


def _load_eval_inputs(args: argparse.Namespace):
    _require_file(args.model)
    params, meta = model.load_model(args.model)
    graph_paths = _resolve_graph_paths(args.graphs)
    truth_paths = _resolve_truth_paths(args.truth, graph_paths)
    graphs, truths, ids, seconds = [], [], [], []
    for gp, tp in zip(graph_paths, truth_paths):
        loaded = graph.load_edge_list(str(gp))
        t_ids, t_vals, t_sec = exact.load_bc_scores(str(tp))
        truths.append(exact.align_scores(t_ids, t_vals, loaded.original_ids))
        graphs.append(loaded.graph)
        ids.append(gp.stem)
        seconds.append(float("nan") if t_sec is None else t_sec)
    return params, meta, graphs, truths, ids, seconds


def _cmd_eval(args: argparse.Namespace) -> int:
    params, meta, graphs, truths, ids, seconds = _load_eval_inputs(args)
    report = metrics.run_benchmark(params, graphs, truths, meta.L, graph_ids=ids, exact_seconds=seconds)
    report.to_csv(args.report)
    _progress(report.render_table())
    _progress(f"report -> {args.report}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    params, meta, graphs, truths, ids, seconds = _load_eval_inputs(args)
    report = metrics.run_benchmark(params, graphs, truths, meta.L, graph_ids=ids, exact_seconds=seconds)
    sampled_top1: list[float] = []
    sampled_secs: list[float] = []
    for idx, (g, bc) in enumerate(zip(graphs, truths)):
        k = args.sample_k if args.sample_k >= 1 else max(1, g.node_count // 20)
        k = min(k, g.node_count)
        t0 = time.perf_counter()
        est = exact.sampled_source_bc(g, k, seed=idx, threads=args.threads)
        sampled_secs.append(time.perf_counter() - t0)
        sampled_top1.append(metrics.top_n_percent_accuracy(est, bc, 1.0))
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "graph_id,nodes,edges,"
            + ",".join(metrics.EvalReport.COLUMNS)
            + ",sampled_top1,sampled_seconds\n"
        )
        for row, st, ss in zip(report.rows, sampled_top1, sampled_secs):
            cells = [row.graph_id, str(row.nodes), str(row.edges)]
            cells += [f"{getattr(row, col):.17g}" for col in metrics.EvalReport.COLUMNS]
            cells += [f"{st:.17g}", f"{ss:.17g}"]
            fh.write(",".join(cells) + "\n")
    _progress(report.render_table())
    _progress(f"report -> {args.report}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "exact": _cmd_exact,
    "train": _cmd_train,
    "rank": _cmd_rank,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
}


def run_cli(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, nonzero for usage problems
        return 0 if exc.code == 0 else 1
    if getattr(args, "threads", None) is not None:
        try:
            threads = int(args.threads)
        except (TypeError, ValueError):
            print(f"bcrank: invalid --threads value {args.threads!r}", file=sys.stderr)
            return 1
        if threads < 1:
            print("bcrank: --threads must be >= 1", file=sys.stderr)
            return 1
        _set_blas_threads(threads)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"bcrank: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures: bad file contents, numeric errors
        print(f"bcrank: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
