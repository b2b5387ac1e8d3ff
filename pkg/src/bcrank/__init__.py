"""Learning-to-rank graph nodes by betweenness centrality.

A library and CLI that generates synthetic graphs, computes exact
betweenness centrality as ground truth, trains an inductive GNN
encoder-decoder with a pairwise ranking loss, and applies the trained model
to unseen graphs of any size.
"""

from .exact import brandes_bc, brute_force_bc, sampled_source_bc
from .graph import (
    Graph,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_powerlaw_cluster,
    initial_features,
    load_edge_list,
    save_edge_list,
)
from .metrics import kendall_tau, rank_top_k, run_benchmark, top_n_percent_accuracy
from .model import (
    ModelMeta,
    ModelParams,
    decode,
    embed,
    encode,
    forward,
    init_params,
    load_model,
    rank_scores,
    save_model,
)
from .train import TrainConfig, gradient_check, pairwise_ranking_loss, sample_pairs, train

__all__ = [
    "Graph",
    "gen_powerlaw_cluster",
    "gen_erdos_renyi",
    "gen_barabasi_albert",
    "load_edge_list",
    "save_edge_list",
    "initial_features",
    "brandes_bc",
    "brute_force_bc",
    "sampled_source_bc",
    "ModelParams",
    "ModelMeta",
    "init_params",
    "encode",
    "decode",
    "forward",
    "embed",
    "rank_scores",
    "save_model",
    "load_model",
    "TrainConfig",
    "train",
    "sample_pairs",
    "pairwise_ranking_loss",
    "gradient_check",
    "top_n_percent_accuracy",
    "kendall_tau",
    "rank_top_k",
    "run_benchmark",
]

__version__ = "0.1.0"
