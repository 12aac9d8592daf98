import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signed_gossip.errors import GraphFormatError
from signed_gossip.selection import (
    RngStream, load_selection_csv, make_selection, sample_pair, sample_pairs,
)
from signed_gossip.signed_graph import SignedGraph, complete_graph, ring_graph


def star4():
    return SignedGraph.from_edges(4, [(0, 1, "+"), (0, 2, "-"), (0, 3, "+")])


class TestMatrices:
    def test_complete_k3(self):
        sel = make_selection("complete", complete_graph(3))
        assert np.allclose(sel.P, (np.ones((3, 3)) - np.eye(3)) / 2)
        assert sel.pair_measure == pytest.approx({(0, 1): 1 / 3, (0, 2): 1 / 3, (1, 2): 1 / 3})

    def test_uniform_neighbor_star(self):
        sel = make_selection("uniform-neighbor", star4())
        assert np.allclose(sel.P[0, 1:], 1 / 3)
        assert np.allclose(sel.P[1:, 0], 1)

    def test_ring_half(self):
        sel = make_selection("ring-half", ring_graph(4))
        assert set(sel.pair_measure.values()) == {0.25}
        assert len(sel.pair_measure) == 4

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            make_selection("complete", ring_graph(4))
        with pytest.raises(ValueError):
            make_selection("ring-half", complete_graph(4))
        with pytest.raises(ValueError):
            make_selection("nearest", ring_graph(4))
        with pytest.raises(ValueError):
            make_selection("uniform-neighbor", SignedGraph.from_edges(3, [(0, 1, "+")]))

    @pytest.mark.parametrize("P, msg", [
        (np.full((3, 3), 1 / 3), "not an edge"),
        (np.array([[0.5, 0.6, 0], [0.5, 0.5, 0], [0, 1, 0]]), "sum to 1"),
        (np.array([[1.5, -0.5, 0], [0.5, 0.5, 0], [0, 1, 0]]), "nonnegative"),
        (np.eye(2), "3x3"),
    ])
    def test_custom_validation(self, P, msg):
        g = SignedGraph.from_edges(3, [(0, 1, "+"), (1, 2, "-")])
        with pytest.raises(ValueError, match=msg):
            make_selection("custom", g, P)

    def test_pair_measure_with_self_mass(self):
        g = SignedGraph.from_edges(3, [(0, 1, "+"), (1, 2, "-")])
        P = np.array([[0.5, 0.5, 0], [0.25, 0.5, 0.25], [0, 0.2, 0.8]])
        sel = make_selection("custom", g, P)
        assert sum(sel.pair_measure.values()) == pytest.approx(1 - np.trace(P) / 3)
        assert sel.noop_mass == pytest.approx(np.trace(P) / 3)

    def test_assumption2(self):
        g = complete_graph(4)
        assert make_selection("complete", g).assumption2() == {"holds": True,
                                                               "branch": "doubly-stochastic"}
        assert make_selection("custom", g, np.eye(4)).assumption2()["branch"] == "diagonal"
        assert not make_selection("complete", complete_graph(3)).assumption2()["holds"]

    def test_csv(self, tmp_path):
        g = SignedGraph.from_edges(3, [(0, 1, "+"), (1, 2, "-")])
        path = tmp_path / "p.csv"
        path.write_text("0,1,0\n0.5,0,0.5\n0,1,0\n")
        assert np.allclose(load_selection_csv(path, g).P[1], [0.5, 0, 0.5])
        path.write_text("0,1,0\n0.5,x,0.5\n0,1,0\n")
        with pytest.raises(GraphFormatError):
            load_selection_csv(path, g)
        path.write_text("0,1,0\n1,0,0.5\n0,1,0\n")
        with pytest.raises(GraphFormatError):
            load_selection_csv(path, g)


class TestSampling:
    def test_identity_is_noop(self):
        g = complete_graph(3)
        sel = make_selection("custom", g, np.eye(3))
        rng = RngStream(1)
        assert all(sample_pair(sel, rng) is None for _ in range(50))
        i, j = sample_pairs(sel, rng, 100)
        assert np.all(i == j)

    def test_deterministic(self):
        sel = make_selection("complete", complete_graph(3))
        a, b = RngStream(42), RngStream(42)
        assert [sample_pair(sel, a) for _ in range(100)] == [sample_pair(sel, b) for _ in range(100)]
        assert a.counter == 200

    def test_streams_differ_by_path(self):
        sel = make_selection("complete", complete_graph(5))
        x = sample_pairs(sel, RngStream(7, (0,)), 50)[0]
        y = sample_pairs(sel, RngStream(7, (1,)), 50)[0]
        assert not np.array_equal(x, y)
        assert np.array_equal(RngStream(7).spawn(3).random(5), RngStream(7, (3,)).random(5))

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            RngStream(-1)

    def test_frequencies_match_pair_measure(self):
        g = SignedGraph.from_edges(4, [(0, 1, "+"), (1, 2, "-"), (2, 3, "+"), (0, 2, "+")])
        sel = make_selection("uniform-neighbor", g)
        draws = 1_000_000
        i, j = sample_pairs(sel, RngStream(3), draws)
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        for (u, v), mu in sel.pair_measure.items():
            freq = np.mean((lo == u) & (hi == v))
            se = np.sqrt(mu * (1 - mu) / draws)
            assert abs(freq - mu) < 3 * se

    def test_scalar_and_block_samplers_agree_in_distribution(self):
        sel = make_selection("uniform-neighbor", star4())
        rng = RngStream(9)
        pairs = [sample_pair(sel, rng) for _ in range(20000)]
        centre = np.mean([p is not None and 0 in p for p in pairs])
        assert centre == 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32), st.integers(2, 6))
    def test_only_compliant_pairs(self, seed, n):
        g = ring_graph(n) if n >= 3 else SignedGraph.from_edges(2, [(0, 1, "+")])
        sel = make_selection("uniform-neighbor", g)
        i, j = sample_pairs(sel, RngStream(seed), 200)
        for a, b in zip(i.tolist(), j.tolist()):
            assert a == b or g.sign(a, b) is not None
