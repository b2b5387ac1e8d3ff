"""Encoder-decoder model: initialization, forward pass, serialization."""

import numpy as np
import pytest

from bcrank.graph import from_edge_pairs, gen_powerlaw_cluster
from bcrank.model import (
    ModelFormatError,
    ModelMeta,
    ModelParams,
    decode,
    embed,
    encode,
    export_embeddings,
    forward,
    gru_cell,
    init_params,
    load_model,
    rank_scores,
    save_model,
)


def zero_params(c=3, p=4, q=2):
    base = init_params(c, p, q, seed=0)
    return ModelParams(**{k: np.zeros_like(v) for k, v in base.as_dict().items()})


class TestInitParams:
    def test_deterministic_per_seed(self):
        a = init_params(3, 16, 8, seed=5)
        b = init_params(3, 16, 8, seed=5)
        for k, arr in a.as_dict().items():
            assert np.array_equal(arr, b.as_dict()[k])

    def test_shapes_and_bounds(self):
        params = init_params(3, 128, 64, seed=1)
        assert params.W0.shape == (3, 128) and params.W0.size == 384
        bound = np.sqrt(6.0 / (3 + 128))
        assert np.all(np.abs(params.W0) <= bound)
        assert params.W4.shape == (128, 64)
        assert params.W5.shape == (64,)

    def test_entry_mean_near_zero_across_seeds(self):
        # uniform[-a, a] entries: the grand mean over many seeds sits within
        # three standard errors of zero
        p = 8
        total = np.zeros((p, p))
        n_seeds = 1000
        for seed in range(n_seeds):
            total += init_params(3, p, 4, seed=seed).W1
        grand_mean = total.sum() / (n_seeds * p * p)
        a = np.sqrt(6.0 / (p + p))
        stderr = (a / np.sqrt(3.0)) / np.sqrt(n_seeds * p * p)
        assert abs(grand_mean) < 3 * stderr

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            init_params(0, 4, 2, seed=0)


class TestGruCell:
    def test_zero_weights_halve_previous_state(self):
        params = zero_params(p=4)
        h_prev = np.arange(8.0).reshape(2, 4)
        h_new, u, r, f = gru_cell(h_prev, np.ones((2, 4)), params)
        assert np.all(u == 0.5) and np.all(r == 0.5) and np.all(f == 0.0)
        np.testing.assert_array_equal(h_new, 0.5 * h_prev)

    def test_zero_state_zero_weights(self):
        params = zero_params(p=4)
        h_new, *_ = gru_cell(np.zeros((3, 4)), np.zeros((3, 4)), params)
        assert np.all(h_new == 0.0)

    def test_output_between_candidate_and_previous(self):
        rng = np.random.default_rng(3)
        params = init_params(3, 6, 2, seed=9)
        h_prev = rng.standard_normal((10, 6))
        h_nbr = rng.standard_normal((10, 6))
        h_new, u, r, f = gru_cell(h_prev, h_nbr, params)
        lo = np.minimum(f, h_prev)
        hi = np.maximum(f, h_prev)
        assert np.all(h_new >= lo - 1e-12) and np.all(h_new <= hi + 1e-12)

    def test_shape_mismatch(self):
        params = init_params(3, 4, 2, seed=0)
        with pytest.raises(ValueError):
            gru_cell(np.zeros((2, 4)), np.zeros((2, 5)), params)


class TestEncode:
    def test_single_layer_identity_weights(self):
        # degree-2 node with identity input transform: z = [2,1,1]/sqrt(6)
        g = from_edge_pairs(3, [(0, 1), (1, 2)])
        params = zero_params(c=3, p=3, q=2)
        params.W0[:] = np.eye(3)
        z, _ = encode(g, params, layers=1)
        np.testing.assert_allclose(z[1], np.array([2.0, 1.0, 1.0]) / np.sqrt(6.0), atol=1e-15)

    def test_embeddings_bounded(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            g = gen_powerlaw_cluster(int(rng.integers(10, 60)), 3, 0.2, seed=trial)
            params = init_params(3, 16, 8, seed=trial)
            z, _ = encode(g, params, layers=4)
            assert np.all(z >= -1.0 - 1e-12) and np.all(z <= 1.0 + 1e-12)

    def test_lean_embed_matches_encode(self):
        g = gen_powerlaw_cluster(40, 3, 0.1, seed=5)
        params = init_params(3, 16, 8, seed=2)
        z_full, _ = encode(g, params, layers=5)
        np.testing.assert_array_equal(embed(g, params, 5), z_full)

    def test_rejects_zero_layers(self):
        g = from_edge_pairs(2, [(0, 1)])
        with pytest.raises(ValueError):
            encode(g, init_params(3, 4, 2, seed=0), layers=0)


class TestDecode:
    def test_zero_w4_gives_zero_scores(self):
        params = zero_params(p=4, q=2)
        assert np.all(decode(np.ones((5, 4)), params) == 0.0)

    def test_relu_kills_negative_coordinate(self):
        params = zero_params(c=3, p=2, q=2)
        params.W4[:] = np.eye(2)
        params.W5[:] = np.array([1.0, 1.0])
        y = decode(np.array([[0.3, -0.5]]), params)
        assert y[0] == pytest.approx(0.3, abs=0)

    def test_scaling_w5_preserves_argsort(self):
        rng = np.random.default_rng(4)
        params = init_params(3, 8, 4, seed=1)
        z = rng.uniform(-1, 1, size=(30, 8))
        y = decode(z, params)
        scaled = ModelParams(**{**params.as_dict(), "W5": 3.5 * params.W5})
        y_scaled = decode(z, scaled)
        np.testing.assert_allclose(y_scaled, 3.5 * y, rtol=1e-12)
        assert np.array_equal(np.argsort(y), np.argsort(y_scaled))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            decode(np.ones((5, 3)), init_params(3, 4, 2, seed=0))


class TestForward:
    def test_pure_function(self):
        g = gen_powerlaw_cluster(30, 3, 0.2, seed=8)
        params = init_params(3, 8, 4, seed=3)
        y1, _ = forward(g, params, 3)
        y2, _ = forward(g, params, 3)
        assert np.array_equal(y1, y2)

    def test_single_node_graph(self):
        g = from_edge_pairs(1, [])
        y, _ = forward(g, init_params(3, 8, 4, seed=0), 3)
        assert y.shape == (1,) and np.isfinite(y[0])

    def test_permutation_equivariance(self):
        g = gen_powerlaw_cluster(35, 3, 0.3, seed=10)
        params = init_params(3, 16, 8, seed=6)
        y, _ = forward(g, params, 4)
        rng = np.random.default_rng(2)
        perm = rng.permutation(35)
        y_perm, _ = forward(g.relabel(perm), params, 4)
        np.testing.assert_allclose(y_perm[perm], y, rtol=1e-12, atol=1e-12)

    def test_rank_scores_matches_forward(self):
        g = gen_powerlaw_cluster(25, 2, 0.1, seed=1)
        params = init_params(3, 8, 4, seed=4)
        y, _ = forward(g, params, 5)
        np.testing.assert_array_equal(rank_scores(g, params, 5), y)


class TestModelFile:
    def test_round_trip_bit_identical(self, tmp_path):
        params = init_params(3, 12, 6, seed=13)
        meta = ModelMeta(c=3, p=12, q=6, L=4)
        path = tmp_path / "m.txt"
        save_model(params, meta, str(path))
        loaded, meta2 = load_model(str(path))
        assert meta2 == meta
        for k, arr in params.as_dict().items():
            assert np.array_equal(arr, loaded.as_dict()[k]), k

    def test_size_independent_of_graph(self, tmp_path):
        # inductive contract: the file depends only on the dimensions
        params = init_params(3, 8, 4, seed=0)
        meta = ModelMeta(c=3, p=8, q=4, L=5)
        rank_scores(gen_powerlaw_cluster(50, 4, 0.05, 0), params, 5)
        save_model(params, meta, str(tmp_path / "a.txt"))
        rank_scores(gen_powerlaw_cluster(500, 4, 0.05, 1), params, 5)
        save_model(params, meta, str(tmp_path / "b.txt"))
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "m.txt"
        save_model(init_params(3, 4, 2, seed=0), ModelMeta(3, 4, 2, 2), str(path))
        text = path.read_text().replace("drbc-model v1", "drbc-model v2", 1)
        path.write_text(text)
        with pytest.raises(ModelFormatError, match="version"):
            load_model(str(path))

    def test_missing_block_named(self, tmp_path):
        path = tmp_path / "m.txt"
        save_model(init_params(3, 4, 2, seed=0), ModelMeta(3, 4, 2, 2), str(path))
        lines = path.read_text().splitlines()
        w5_at = next(i for i, l in enumerate(lines) if l.startswith("W5"))
        path.write_text("\n".join(lines[:w5_at]) + "\n")
        with pytest.raises(ModelFormatError, match="W5"):
            load_model(str(path))

    def test_dimension_mismatch_named(self, tmp_path):
        path = tmp_path / "m.txt"
        save_model(init_params(3, 4, 2, seed=0), ModelMeta(3, 4, 2, 2), str(path))
        text = path.read_text().replace("W4 4 2", "W4 4 3", 1)
        path.write_text(text)
        with pytest.raises(ModelFormatError, match="W4"):
            load_model(str(path))

    def test_not_a_model_file(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("something else\n")
        with pytest.raises(ModelFormatError):
            load_model(str(path))


def test_export_embeddings_header(tmp_path):
    z = np.array([[0.5, -0.25], [1.0, 0.0]])
    path = tmp_path / "z.csv"
    export_embeddings(z, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "node,z0,z1"
    assert lines[1] == "0,0.5,-0.25"
    assert len(lines) == 3
