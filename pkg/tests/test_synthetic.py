import math

import numpy as np
import pytest
from scipy.special import expit

from ocforest.synthetic import (
    BETA,
    Design,
    Thresholds,
    compute_thresholds,
    discretize,
    draw_covariates,
    make_oracle,
    regression_function,
    simulate_sample,
    true_marginal_effect,
    true_probabilities,
)
from ocforest._rng import substream


class TestRegressionFunction:
    def test_zero_point_design1(self):
        assert regression_function(1, np.zeros(6)) == 0.0

    def test_zero_point_design2(self):
        assert regression_function(2, np.zeros(6)) == 0.0

    def test_design3_at_quarter_period(self):
        # choose w with w.beta = pi/2 so the doubled sine hits 2
        w = np.zeros(6)
        w[0] = math.pi / 2
        assert regression_function(3, w) == pytest.approx(2.0)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError, match="columns"):
            regression_function(1, np.zeros(5))

    def test_invalid_design(self):
        with pytest.raises(ValueError, match="design"):
            Design(4)


class TestThresholds:
    def test_deterministic(self):
        a = compute_thresholds(2, 42)
        b = compute_thresholds(2, 42)
        assert (a.zeta1, a.zeta2) == (b.zeta1, b.zeta2)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError, match="increasing"):
            Thresholds(1.0, 0.5)

    def test_empirical_cdf_at_thresholds(self):
        # the same latent draw evaluated at zeta1 must sit at the 33% level
        seed = 77
        thr = compute_thresholds(1, seed, n_draws=200_000)
        from ocforest.synthetic import draw_latent
        _, ystar = draw_latent(Design(1), 200_000, substream(seed))
        cdf1 = np.mean(ystar <= thr.zeta1)
        cdf2 = np.mean(ystar <= thr.zeta2)
        assert 0.3299 <= cdf1 <= 0.3301
        assert 0.6599 <= cdf2 <= 0.6601

    @pytest.mark.parametrize("design", [1, 2, 3])
    def test_fresh_sample_class_shares(self, design):
        thr = compute_thresholds(design, 13)
        ds = simulate_sample(design, thr, 200_000, 14)
        shares = ds.class_counts() / ds.n_rows
        assert abs(shares[0] - 0.33) < 0.01
        assert abs(shares[1] - 0.33) < 0.01
        assert abs(shares[2] - 0.34) < 0.01


class TestSimulateSample:
    def test_discretization_rule(self):
        thr = Thresholds(-1.0, 1.0)
        y = discretize(np.array([-5.0, -1.0, 0.0, 1.0, 1.5]), thr)
        assert y.tolist() == [1, 1, 2, 2, 3]

    def test_deterministic(self, thresholds_d1):
        a = simulate_sample(1, thresholds_d1, 50, 3)
        b = simulate_sample(1, thresholds_d1, 50, 3)
        assert np.array_equal(a.covariates, b.covariates)
        assert np.array_equal(a.outcome, b.outcome)

    def test_column_kinds(self, small_dataset):
        kinds = [m.kind for m in small_dataset.column_meta]
        assert kinds == ["continuous", "discrete", "continuous", "discrete",
                         "continuous", "discrete"]

    def test_bernoulli_columns_binary(self, small_dataset):
        for j in (1, 3, 5):
            vals = set(np.unique(small_dataset.covariates[:, j]))
            assert vals <= {0.0, 1.0}

    def test_labels_match_thresholds(self, thresholds_d1):
        # reconstructing the latent draw reproduces the stored labels
        from ocforest.synthetic import draw_latent
        n = 500
        W, ystar = draw_latent(Design(1), n, substream(21))
        ds = simulate_sample(1, thresholds_d1, n, 21)
        assert np.array_equal(ds.covariates, W)
        assert np.array_equal(ds.outcome, discretize(ystar, thresholds_d1))


class TestTruthOracle:
    def test_hand_computed_probabilities(self):
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        p = oracle.probabilities(np.zeros(6))
        assert p == pytest.approx([0.268941, 0.462117, 0.268941], abs=1e-6)

    def test_rows_sum_to_one(self, rng):
        oracle = make_oracle(2, Thresholds(-0.8, 0.9))
        W = draw_covariates(200, rng)
        p = oracle.probabilities(W)
        assert np.abs(p.sum(axis=1) - 1).max() < 1e-12

    def test_extreme_regression_value_limits(self):
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        w = np.zeros(6)
        w[0] = 40.0  # g(w) = 40 pushes all mass to the top class
        p = oracle.probabilities(w)
        assert p[2] == pytest.approx(1.0, abs=1e-12)

    def test_noise_covariates_have_zero_effect(self):
        for design in (1, 2, 3):
            oracle = make_oracle(design, Thresholds(-1.0, 1.0))
            w = np.array([0.3, 1.0, -0.2, 0.0, 0.7, 1.0])
            for j in (4, 5):
                eff = oracle.marginal_effects(j, w)
                assert np.allclose(eff, 0.0, atol=1e-15)

    def test_continuous_effects_sum_to_zero(self, rng):
        for design in (1, 2, 3):
            oracle = make_oracle(design, Thresholds(-0.5, 1.2))
            w = draw_covariates(1, rng)[0]
            for j in (0, 2, 4):
                eff = oracle.marginal_effects(j, w)
                assert abs(eff.sum()) < 1e-14

    def test_hand_computed_derivative(self):
        # design 1, first covariate, zero point: dp1/dw1 = -f(-1)
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        eff = oracle.marginal_effects(0, np.zeros(6))
        f1 = expit(-1.0) * expit(1.0)
        assert eff[0] == pytest.approx(-f1, abs=1e-9)
        assert eff[0] == pytest.approx(-0.196612, abs=1e-6)

    def test_discrete_effect_is_unit_contrast(self):
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        w = np.zeros(6)
        w[1] = 0.4
        up = w.copy()
        up[1] = 1.0
        down = w.copy()
        down[1] = 0.0
        expected = oracle.probabilities(up) - oracle.probabilities(down)
        assert np.allclose(oracle.marginal_effects(1, w), expected)

    def test_discrete_effect_at_integer_point_uses_unit_step(self):
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        w = np.zeros(6)  # binary covariate sits at its minimum
        eff = oracle.marginal_effects(1, w)
        assert not np.allclose(eff, 0.0)

    @pytest.mark.parametrize("design", [1, 2, 3])
    def test_derivative_matches_finite_differences(self, design, rng):
        thr = compute_thresholds(design, 5, n_draws=100_000)
        oracle = make_oracle(design, thr)
        h = 1e-6
        for _ in range(30):
            w = draw_covariates(1, rng)[0]
            for j in (0, 2, 4):
                up = w.copy()
                up[j] += h
                down = w.copy()
                down[j] -= h
                fd = (oracle.probabilities(up) - oracle.probabilities(down)) / (2 * h)
                assert np.abs(oracle.marginal_effects(j, w) - fd).max() < 1e-6

    def test_module_level_wrappers(self):
        oracle = make_oracle(1, Thresholds(-1.0, 1.0))
        w = np.zeros(6)
        assert np.array_equal(true_probabilities(oracle, w),
                              oracle.probabilities(w))
        assert np.array_equal(true_marginal_effect(oracle, 0, w),
                              oracle.marginal_effects(0, w))
