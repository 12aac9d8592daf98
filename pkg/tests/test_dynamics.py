import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signed_gossip.dynamics import (
    StopRule, UpdateParams, simulate, step_altafini, step_asymmetric_branch,
    step_asymmetric_constrained, step_symmetric,
)
from signed_gossip.selection import RngStream, make_selection
from signed_gossip.signed_graph import NEGATIVE, POSITIVE, complete_graph, ring_graph

beliefs = st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=6)
unit = st.floats(0, 1)


class TestParams:
    @pytest.mark.parametrize("kw", [
        {"alpha": 1.2}, {"beta": -0.1}, {"rule": "majority"}, {"asym": (0.5, 0.6, 0)},
        {"bound": 0}, {"rule": "altafini", "beta": 1.0},
        {"rule": "asymmetric-constrained"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            UpdateParams(**kw)


class TestSymmetric:
    def test_half_average(self):
        assert np.allclose(step_symmetric([0, 1], (0, 1), POSITIVE, UpdateParams(alpha=0.5)), 0.5)

    def test_swap(self):
        assert np.allclose(step_symmetric([0, 1], (0, 1), POSITIVE, UpdateParams(alpha=1)), [1, 0])

    def test_repel(self):
        out = step_symmetric([0, 1], (0, 1), NEGATIVE, UpdateParams(beta=1))
        assert np.allclose(out, [-1, 2])

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError):
            step_symmetric([0, 1], (1, 1), POSITIVE, UpdateParams())

    @given(beliefs, unit, st.floats(0, 5), st.sampled_from((POSITIVE, NEGATIVE)))
    def test_sum_and_gap(self, x, alpha, beta, sign):
        x = np.array(x)
        out = step_symmetric(x, (0, 1), sign, UpdateParams(alpha=alpha, beta=beta))
        scale = 1 + np.abs(x).sum() * (1 + 2 * beta)
        assert out.sum() == pytest.approx(x.sum(), abs=1e-9 * scale)
        factor = abs(2 * alpha - 1) if sign == POSITIVE else 2 * beta + 1
        assert abs(out[0] - out[1]) == pytest.approx(factor * abs(x[0] - x[1]), abs=1e-9 * scale)
        assert np.array_equal(out[2:], x[2:])


class TestAltafini:
    p = UpdateParams(beta=0.5, rule="altafini")

    def test_cancel(self):
        assert np.allclose(step_altafini([1, 1], (0, 1), NEGATIVE, self.p), [0, 0])

    def test_fixed_point(self):
        assert np.allclose(step_altafini([1, -1], (0, 1), NEGATIVE, self.p), [1, -1])

    def test_zero(self):
        for s in (POSITIVE, NEGATIVE):
            assert np.allclose(step_altafini([0, 0], (0, 1), s, self.p), 0)


class TestAsymmetric:
    def params(self, **kw):
        base = dict(alpha=1 / 3, beta=1.0, rule="asymmetric-constrained", bound=1.0)
        return UpdateParams(**{**base, **kw})

    def test_both_branch_clamps(self):
        out = step_asymmetric_branch([0.9, -0.9], (0, 1), NEGATIVE, self.params(), 0.99)
        assert np.allclose(out, [1, -1])

    def test_branches(self):
        p = self.params(alpha=0.5)
        x = [0.0, 0.8]
        assert np.allclose(step_asymmetric_branch(x, (0, 1), POSITIVE, p, 0.1), [0.4, 0.8])
        assert np.allclose(step_asymmetric_branch(x, (0, 1), POSITIVE, p, 0.5), [0.0, 0.4])
        assert np.allclose(step_asymmetric_branch(x, (0, 1), POSITIVE, p, 0.9), [0.4, 0.4])

    def test_initiator_only(self):
        p = self.params(asym=(1.0, 0.0, 0.0))
        rng = RngStream(0)
        for _ in range(20):
            out = step_asymmetric_constrained([0.2, -0.6, 0.1], (2, 0), NEGATIVE, p, rng)
            assert out[0] == 0.2 and out[1] == -0.6

    @given(beliefs, unit, unit)
    def test_positive_matches_symmetric_before_clamp(self, x, alpha, u):
        x = np.clip(np.array(x) / 100, -1, 1)
        p = self.params(alpha=alpha)
        both = step_asymmetric_branch(x, (0, 1), POSITIVE, p, 0.999)
        sym = step_symmetric(x, (0, 1), POSITIVE, UpdateParams(alpha=alpha))
        assert np.allclose(both, sym)

    @given(beliefs, st.floats(0, 10), unit)
    def test_stays_in_box(self, x, beta, u):
        x = np.clip(np.array(x), -1, 1)
        out = step_asymmetric_branch(x, (1, 0), NEGATIVE, self.params(beta=beta), u)
        assert np.all(np.abs(out) <= 1)


class TestSimulate:
    def setup_method(self):
        self.g = complete_graph(3)
        self.sel = make_selection("complete", self.g)

    def test_constant_start(self):
        stats = simulate(self.g, self.sel, UpdateParams(), [2.0] * 3, 100, RngStream(0),
                         stop=StopRule())
        assert stats.stop_reason == "converged" and stats.stop_k == 0 and stats.events == 0

    def test_averaging_converges(self):
        x0 = [1.0, -2.0, 0.5]
        stats = simulate(self.g, self.sel, UpdateParams(alpha=0.5), x0, 10_000, RngStream(1),
                         stop=StopRule(1e-6, None))
        assert stats.stop_reason == "converged" and stats.spread[-1] < 1e-6
        assert stats.x_final.sum() == pytest.approx(sum(x0))

    def test_divergence_stop(self):
        g = complete_graph(3, [(0, 1)])
        stats = simulate(g, make_selection("complete", g), UpdateParams(alpha=0.5, beta=3.0),
                         [1.0, 0.0, -1.0], 10_000, RngStream(2), stop=StopRule.default([1, 0, -1]))
        assert stats.stop_reason == "diverged" and stats.max_spread > 1e6

    def test_recording_schedule(self):
        stats = simulate(self.g, self.sel, UpdateParams(alpha=0.3), [0, 1, 2], 25, RngStream(3),
                         record_every=10, snapshots=True)
        assert stats.k.tolist() == [0, 10, 20, 25]
        assert stats.snapshots.shape == (4, 3)
        assert np.allclose(stats.spread, np.ptp(stats.snapshots, axis=1))

    def test_csv(self):
        stats = simulate(self.g, self.sel, UpdateParams(alpha=0.3), [0, 1, 2], 3, RngStream(3),
                         snapshots=True)
        lines = stats.to_csv().splitlines()
        assert lines[0] == "k,spread,x0,x1,x2"
        assert len(lines) == 5

    def test_prefix_consistent(self):
        p = UpdateParams(alpha=0.4, beta=0.2)
        g = complete_graph(4, [(0, 1)])
        sel = make_selection("complete", g)
        short = simulate(g, sel, p, [0, 1, 2, 3], 1500, RngStream(5, (1,)), snapshots=True)
        long = simulate(g, sel, p, [0, 1, 2, 3], 4000, RngStream(5, (1,)), snapshots=True)
        assert np.array_equal(short.snapshots, long.snapshots[:1501])

    def test_pair_max_matches_snapshots(self):
        g = ring_graph(5, [(0, 1)])
        stats = simulate(g, make_selection("uniform-neighbor", g), UpdateParams(beta=0.5),
                         [0.1, -0.3, 0.2, 0.0, 0.4], 300, RngStream(4), snapshots=True)
        snaps = stats.snapshots
        expected = np.abs(snaps[:, :, None] - snaps[:, None, :]).max(axis=0)
        assert np.allclose(stats.pair_max, expected)

    def test_touches_and_cluster(self):
        g = complete_graph(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
        p = UpdateParams(alpha=1 / 3, beta=0.5, rule="asymmetric-constrained", bound=1.0)
        x0 = [0.96, 0.2, -0.1, -0.3]
        stats = simulate(g, make_selection("uniform-neighbor", g), p, x0, 3000, RngStream(6),
                         snapshots=True)
        snaps = stats.snapshots
        assert np.all(np.abs(snaps) <= 1)
        band = np.where(snaps >= 0.95, 1, np.where(snaps <= -0.95, -1, 0))
        entries_up = (band[0] == 1) + ((band[1:] == 1) & (band[:-1] != 1)).sum(axis=0)
        entries_down = (band[0] == -1) + ((band[1:] == -1) & (band[:-1] != -1)).sum(axis=0)
        assert stats.touch_upper.tolist() == entries_up.tolist()
        assert stats.touch_lower.tolist() == entries_down.tolist()
        assert stats.cluster is not None
        assert stats.cluster[0] == stats.cluster[1] == -stats.cluster[2] == -stats.cluster[3]
        assert np.all(band[stats.cluster_since:] == np.array(stats.cluster))

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            simulate(self.g, self.sel, UpdateParams(), [0, 1], 10, RngStream(0))
        p = UpdateParams(rule="asymmetric-constrained", bound=1.0)
        with pytest.raises(ValueError):
            simulate(self.g, self.sel, p, [0, 2, 0], 10, RngStream(0))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0, 2))
    def test_mean_preserved(self, seed, alpha, beta):
        g = complete_graph(4, [(0, 1), (2, 3)])
        x0 = np.array([0.3, -1.0, 0.5, 0.2])
        stats = simulate(g, make_selection("complete", g), UpdateParams(alpha=alpha, beta=beta),
                         x0, 50, RngStream(seed), track_pairs=False)
        assert stats.x_final.sum() == pytest.approx(x0.sum(), abs=1e-9 * (1 + stats.max_spread))
