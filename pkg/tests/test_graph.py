"""Graph representation, generators, and edge-list round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcrank.graph import (
    EdgeListParseError,
    from_edge_pairs,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_powerlaw_cluster,
    disjoint_union,
    initial_features,
    load_edge_list,
    save_edge_list,
)


def graphs_equal(a, b) -> bool:
    return (
        a.node_count == b.node_count
        and np.array_equal(a.indptr, b.indptr)
        and np.array_equal(a.indices, b.indices)
    )


class TestPowerlawCluster:
    def test_edge_count_no_triangles(self):
        g = gen_powerlaw_cluster(50, 4, 0.0, seed=11)
        assert g.node_count == 50
        assert g.edge_count == (50 - 4) * 4

    def test_edge_count_with_triangles(self):
        # triangle steps replace attachment steps, never change the count
        for seed in range(5):
            g = gen_powerlaw_cluster(60, 4, 0.5, seed=seed)
            assert g.edge_count == (60 - 4) * 4

    def test_first_arrival_connects_to_all_seeds(self):
        g = gen_powerlaw_cluster(5, 4, 0.05, seed=3)
        assert sorted(g.neighbors(4).tolist()) == [0, 1, 2, 3]

    def test_deterministic_per_seed(self):
        a = gen_powerlaw_cluster(50, 4, 0.05, seed=42)
        b = gen_powerlaw_cluster(50, 4, 0.05, seed=42)
        assert graphs_equal(a, b)

    def test_different_seeds_differ(self):
        a = gen_powerlaw_cluster(200, 4, 0.05, seed=1)
        b = gen_powerlaw_cluster(200, 4, 0.05, seed=2)
        assert not graphs_equal(a, b)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gen_powerlaw_cluster(4, 4, 0.05, seed=0)
        with pytest.raises(ValueError):
            gen_powerlaw_cluster(10, 0, 0.05, seed=0)
        with pytest.raises(ValueError):
            gen_powerlaw_cluster(10, 2, 1.5, seed=0)


class TestErdosRenyi:
    def test_empty_and_complete(self):
        assert gen_erdos_renyi(10, 0.0, seed=0).edge_count == 0
        assert gen_erdos_renyi(10, 1.0, seed=0).edge_count == 45

    def test_edge_count_within_four_sigma(self):
        n, p = 1000, 0.008
        pairs = n * (n - 1) // 2
        mean = pairs * p
        sigma = np.sqrt(pairs * p * (1 - p))
        g = gen_erdos_renyi(n, p, seed=5)
        assert abs(g.edge_count - mean) < 4 * sigma

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            gen_erdos_renyi(10, -0.1, seed=0)
        with pytest.raises(ValueError):
            gen_erdos_renyi(0, 0.5, seed=0)


class TestBarabasiAlbert:
    def test_edge_count(self):
        assert gen_barabasi_albert(10, 2, seed=9).edge_count == (10 - 2) * 2

    def test_minimal_case(self):
        g = gen_barabasi_albert(3, 2, seed=0)
        assert sorted(g.neighbors(2).tolist()) == [0, 1]

    def test_deterministic_per_seed(self):
        assert graphs_equal(gen_barabasi_albert(100, 3, seed=8), gen_barabasi_albert(100, 3, seed=8))

    def test_rejects_n_not_above_m(self):
        with pytest.raises(ValueError):
            gen_barabasi_albert(3, 3, seed=0)


def test_generator_invariants_random_parameterizations():
    """Structural invariants hold across 100 random generator calls."""
    rng = np.random.default_rng(0)
    for trial in range(100):
        kind = trial % 3
        seed = int(rng.integers(0, 2**31))
        if kind == 0:
            m = int(rng.integers(1, 5))
            n = int(rng.integers(m + 1, 60))
            g = gen_powerlaw_cluster(n, m, float(rng.uniform(0, 1)), seed)
            assert g.edge_count == (n - m) * m
        elif kind == 1:
            m = int(rng.integers(1, 5))
            n = int(rng.integers(m + 1, 60))
            g = gen_barabasi_albert(n, m, seed)
            assert g.edge_count == (n - m) * m
        else:
            n = int(rng.integers(2, 60))
            g = gen_erdos_renyi(n, float(rng.uniform(0, 0.5)), seed)
        g.check_invariants()


class TestEdgeListIO:
    def test_load_simple_path(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n1 2\n")
        loaded = load_edge_list(str(f))
        assert loaded.graph.node_count == 3
        assert loaded.graph.edge_count == 2

    def test_duplicates_collapse(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n1 0\n0 1\n")
        loaded = load_edge_list(str(f))
        assert loaded.graph.node_count == 2
        assert loaded.graph.edge_count == 1

    def test_id_compaction(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("7 9\n9 12\n")
        loaded = load_edge_list(str(f))
        assert loaded.graph.node_count == 3
        assert loaded.original_ids.tolist() == [7, 9, 12]

    def test_self_loops_dropped_with_count(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 0\n0 1\n1 1\n")
        loaded = load_edge_list(str(f))
        assert loaded.self_loops_dropped == 2
        assert loaded.graph.edge_count == 1

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# a comment\n\n0 1\n")
        assert load_edge_list(str(f)).graph.edge_count == 1

    def test_parse_error_names_line(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("0 1\n0 1 2\n")
        with pytest.raises(EdgeListParseError, match=":2:"):
            load_edge_list(str(f))
        f.write_text("0 x\n")
        with pytest.raises(EdgeListParseError, match=":1:"):
            load_edge_list(str(f))
        f.write_text("-1 2\n")
        with pytest.raises(EdgeListParseError, match="negative"):
            load_edge_list(str(f))

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_edge_list(str(tmp_path / "nope.txt"))

    def test_save_writes_sorted_pairs(self, tmp_path):
        g = from_edge_pairs(3, [(1, 2), (0, 1)])
        out = tmp_path / "g.txt"
        save_edge_list(g, str(out))
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert body == ["0 1", "1 2"]

    def test_save_empty_graph(self, tmp_path):
        g = from_edge_pairs(4, [])
        out = tmp_path / "g.txt"
        save_edge_list(g, str(out))
        assert [l for l in out.read_text().splitlines() if not l.startswith("#")] == []
        assert load_edge_list(str(out)).graph.node_count == 4

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=5, max_value=40),
        m=st.integers(min_value=1, max_value=4),
        p=st.floats(min_value=0, max_value=1),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_round_trip_is_identity(self, tmp_path_factory, n, m, p, seed):
        if m >= n:
            n = m + 1
        g = gen_powerlaw_cluster(n, m, p, seed)
        path = tmp_path_factory.mktemp("rt") / "g.txt"
        save_edge_list(g, str(path))
        assert graphs_equal(load_edge_list(str(path)).graph, g)


class TestInitialFeatures:
    def test_path_graph(self):
        g = from_edge_pairs(3, [(0, 1), (1, 2)])
        assert initial_features(g).tolist() == [[1, 1, 1], [2, 1, 1], [1, 1, 1]]

    def test_isolated_node(self):
        g = from_edge_pairs(1, [])
        assert initial_features(g).tolist() == [[0, 1, 1]]

    def test_star_center(self):
        g = from_edge_pairs(5, [(0, i) for i in range(1, 5)])
        assert initial_features(g)[0].tolist() == [4, 1, 1]


def test_relabel_permutes_degrees():
    g = gen_powerlaw_cluster(30, 3, 0.2, seed=2)
    rng = np.random.default_rng(1)
    perm = rng.permutation(30)
    h = g.relabel(perm)
    h.check_invariants()
    assert np.array_equal(h.degrees[perm], g.degrees)


def test_disjoint_union_offsets_and_structure():
    a = from_edge_pairs(3, [(0, 1), (1, 2)])
    b = from_edge_pairs(2, [(0, 1)])
    u, offsets = disjoint_union([a, b])
    assert offsets.tolist() == [0, 3]
    assert u.node_count == 5
    assert u.edge_count == 3
    assert u.neighbors(3).tolist() == [4]
    u.check_invariants()
