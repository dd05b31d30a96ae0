"""Threshold-search strategies: examples, dominance, and equivariance."""

import numpy as np
import pytest

from embquant import (
    ClipRange,
    EmbeddingTable,
    WorkCounters,
    clip_range_aciq,
    clip_range_asym,
    clip_range_greedy,
    clip_range_gss,
    clip_range_sym,
    clip_range_table,
    quant_mse,
    quantize_table,
    table_normalized_l2,
)

from oracles import gaussian_row, laplacian_row


def _table(seed, rows, dim):
    return EmbeddingTable(np.stack([gaussian_row(seed * 1000 + i, dim) for i in range(rows)]))


class TestSymAsym:
    def test_sym_examples(self):
        assert clip_range_sym([-3.0, 1.0]) == ClipRange(-3.0, 3.0)
        assert clip_range_sym([0.0, 0.0]) == ClipRange(0.0, 0.0)
        assert clip_range_sym([5.0]) == ClipRange(-5.0, 5.0)

    def test_sym_exact_negation(self):
        r = clip_range_sym(gaussian_row(3, 33))
        assert r.xmin == -r.xmax

    def test_asym_examples(self):
        assert clip_range_asym([-3.0, 1.0]) == ClipRange(-3.0, 1.0)
        assert clip_range_asym([7.0]) == ClipRange(7.0, 7.0)
        assert clip_range_asym([1.0, 2.0, 100.0]) == ClipRange(1.0, 100.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            clip_range_sym([])
        with pytest.raises(ValueError):
            clip_range_asym([])


class TestTableRange:
    def test_min_max_over_all(self):
        t = EmbeddingTable(np.array([[0.0, 1.0], [-2.0, 3.0]], dtype=np.float32))
        assert clip_range_table(t) == ClipRange(-2.0, 3.0)

    def test_single_row_equals_asym(self):
        t = _table(4, 1, 16)
        assert clip_range_table(t) == clip_range_asym(t.row(0))

    def test_rowwise_asym_beats_table_in_aggregate(self):
        t = _table(11, 10, 64)
        asym = quantize_table(t, "asym")
        whole = quantize_table(t, "table")
        la = table_normalized_l2(t, asym.dequantize())
        lt = table_normalized_l2(t, whole.dequantize())
        assert la <= lt


class TestGss:
    def test_two_point_symmetric(self):
        r = clip_range_gss([-1.0, 1.0])
        assert r.xmax == pytest.approx(1.0, rel=1e-9)
        assert r.xmin == -r.xmax

    def test_beats_clipping_at_fixed_threshold(self):
        # grid values plus a pair of outliers: the returned threshold must do
        # at least as well as clipping exactly at the outlier magnitude
        x = np.concatenate([np.arange(-15, 16) / 15.0, [8.0, -8.0]])
        r = clip_range_gss(x)
        loss = quant_mse(x, r, 4)
        grid = np.linspace(1e-3, float(np.max(np.abs(x))), 10**4)
        grid_best = min(quant_mse(x, ClipRange(-t, t), 4) for t in [8.0])
        assert loss <= grid_best
        # sanity: not far from a dense threshold scan either
        dense_best = min(quant_mse(x, ClipRange(-t, t), 4) for t in grid)
        assert loss <= dense_best * 1.05

    def test_never_loses_to_sym(self):
        for seed in range(30):
            x = gaussian_row(seed + 50, 64)
            assert quant_mse(x, clip_range_gss(x), 4) <= quant_mse(x, clip_range_sym(x), 4)

    def test_all_zero(self):
        assert clip_range_gss([0.0, 0.0, 0.0]) == ClipRange(0.0, 0.0)


class TestAciq:
    def test_formula_on_two_points(self):
        r = clip_range_aciq([-1.0, 1.0], "laplacian")
        assert r.xmin == pytest.approx(-5.03)
        assert r.xmax == pytest.approx(5.03)

    def test_constant_falls_back(self):
        assert clip_range_aciq([3.0, 3.0, 3.0]) == ClipRange(3.0, 3.0)

    def test_matches_recomputed_mad(self):
        x = laplacian_row(9, 128)
        r = clip_range_aciq(x)
        mu = float(np.mean(np.asarray(x, dtype=np.float64)))
        mad = float(np.mean(np.abs(np.asarray(x, dtype=np.float64) - mu)))
        assert r.xmin == pytest.approx(mu - 5.03 * mad, rel=1e-12)
        assert r.xmax == pytest.approx(mu + 5.03 * mad, rel=1e-12)

    def test_gaussian_requires_constant(self):
        with pytest.raises(ValueError):
            clip_range_aciq([1.0, 2.0], "gaussian")
        r = clip_range_aciq([-1.0, 1.0], "gaussian", gaussian_constant=2.0)
        assert r.xmax == pytest.approx(2.0)


class TestGreedy:
    def test_exact_grid_keeps_full_range(self):
        x = np.arange(16.0)
        r = clip_range_greedy(x, 4)
        assert r == ClipRange(0.0, 15.0)
        assert quant_mse(x, r, 4) == 0.0

    def test_outlier_forces_clipping_win(self):
        x = np.concatenate([gaussian_row(13, 63), np.float32([100.0])])
        greedy = quant_mse(x, clip_range_greedy(x, 4), 4)
        asym = quant_mse(x, clip_range_asym(x), 4)
        assert greedy < asym

    def test_never_loses_to_asym(self):
        for seed in range(50):
            x = gaussian_row(seed + 200, 32)
            assert quant_mse(x, clip_range_greedy(x, 4), 4) <= quant_mse(x, clip_range_asym(x), 4)

    def test_constant_input(self):
        assert clip_range_greedy([4.0, 4.0], 4) == ClipRange(4.0, 4.0)

    def test_evaluation_count(self):
        counters = WorkCounters()
        clip_range_greedy(gaussian_row(5, 64), 4, 200, 0.16, counters=counters)
        # one initial evaluation plus two per shrink step (~ b*r steps)
        assert abs(counters.loss_evals - 2 * 200 * 0.16) <= 200

    def test_budget_tradeoff_against_stock(self):
        """Both budgets dominate the unclipped range; corpus means agree closely.

        A longer/finer walk does not dominate the stock one row by row (the
        two walks genuinely diverge), so the comparison is at corpus level.
        """
        stock_losses = []
        opt_losses = []
        for seed in range(100):
            x = gaussian_row(5000 + seed, 64)
            asym = quant_mse(x, clip_range_asym(x), 4)
            stock = quant_mse(x, clip_range_greedy(x, 4, 200, 0.16), 4)
            opt = quant_mse(x, clip_range_greedy(x, 4, 1000, 0.5), 4)
            assert stock <= asym
            assert opt <= asym
            stock_losses.append(stock)
            opt_losses.append(opt)
        assert np.mean(opt_losses) <= np.mean(stock_losses) * 1.02
        assert np.mean(stock_losses) <= np.mean(opt_losses) * 1.02

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            clip_range_greedy([1.0, 2.0], 4, b=0)
        with pytest.raises(ValueError):
            clip_range_greedy([1.0, 2.0], 4, r=0.0)


class TestEquivariance:
    METHODS = {
        "sym": clip_range_sym,
        "asym": clip_range_asym,
        "gss": clip_range_gss,
        "aciq": clip_range_aciq,
        "greedy": clip_range_greedy,
    }

    def test_negation_maps_asym_range(self):
        x = gaussian_row(31, 48)
        r = clip_range_asym(x)
        rn = clip_range_asym(-x)
        assert rn == ClipRange(-r.xmax, -r.xmin)

    def test_negation_fixes_sym_and_losses(self):
        x = gaussian_row(32, 48)
        assert clip_range_sym(-x) == clip_range_sym(x)
        for name in ("sym", "gss"):
            r = self.METHODS[name](x)
            rn = self.METHODS[name](-x)
            assert quant_mse(x, r, 4) == pytest.approx(quant_mse(-x, rn, 4), rel=1e-12)

    @pytest.mark.parametrize("c", [0.25, 4.0, 1024.0])
    def test_power_of_two_scaling_is_exact(self, c):
        x = gaussian_row(33, 48)
        xs = (x.astype(np.float64) * c).astype(np.float32)
        for name, fn in self.METHODS.items():
            r = fn(x)
            rs = fn(xs)
            if r.xmax != r.xmin:
                assert rs.xmin == pytest.approx(c * r.xmin, rel=1e-6)
                assert rs.xmax == pytest.approx(c * r.xmax, rel=1e-6)
            base = quant_mse(x, r, 4)
            scaled = quant_mse(xs, rs, 4)
            norm_base = np.sqrt(base) / np.linalg.norm(x.astype(np.float64))
            norm_scaled = np.sqrt(scaled) / np.linalg.norm(xs.astype(np.float64))
            assert norm_scaled == pytest.approx(norm_base, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("c", [3.7])
    def test_generic_scaling_smooth_strategies(self, c):
        x = gaussian_row(34, 48)
        xs = (x.astype(np.float64) * c).astype(np.float32)
        for name in ("sym", "asym", "aciq"):
            r = self.METHODS[name](x)
            rs = self.METHODS[name](xs)
            assert rs.xmin == pytest.approx(c * r.xmin, rel=1e-6, abs=1e-9)
            assert rs.xmax == pytest.approx(c * r.xmax, rel=1e-6, abs=1e-9)
