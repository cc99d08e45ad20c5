from dataclasses import replace

import numpy as np
import pytest

from ocforest import ForestParams, fit, from_arrays
from ocforest.baselines import (
    KIND_MULTINOMIAL,
    KIND_ORDERED,
    cumulative_to_probabilities,
    fit_baseline,
    load_external_predictions,
    predict_baseline,
)
from ocforest.data import DataError
from ocforest.forest import FitError


class TestFitBaseline:
    def test_multinomial_has_one_forest_per_class(self, multinomial_baseline):
        assert multinomial_baseline.kind == KIND_MULTINOMIAL
        assert [f.m for f in multinomial_baseline.forests] == [1, 2, 3]
        assert all(f.indicator == "equal" for f in multinomial_baseline.forests)

    def test_ordered_has_cumulative_forests(self, ordered_baseline):
        assert [f.m for f in ordered_baseline.forests] == [1, 2]
        assert all(f.indicator == "cumulative" for f in ordered_baseline.forests)

    def test_unknown_kind(self, small_dataset, small_params):
        with pytest.raises(FitError, match="unknown baseline kind"):
            fit_baseline(small_dataset, "nope", small_params)

    def test_two_class_ordered_single_forest(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(80, 2))
        y = 1 + (X[:, 0] + rng.normal(size=80) > 0).astype(int)
        ds = from_arrays(X, y)
        params = ForestParams(n_trees=10, seed=4)
        model = fit_baseline(ds, KIND_ORDERED, params)
        assert len(model.forests) == 1

    def test_two_class_ordered_equals_multinomial_complement(self):
        # with M=2 the ordered model's cumulative forest and the multinomial
        # class-1 forest are grown on the same indicator and the same streams
        rng = np.random.default_rng(1)
        X = rng.normal(size=(90, 3))
        y = 1 + (X[:, 0] > 0).astype(int)
        ds = from_arrays(X, y)
        params = ForestParams(n_trees=8, seed=11)
        ordered = fit_baseline(ds, KIND_ORDERED, params)
        multinom = fit_baseline(ds, KIND_MULTINOMIAL, params)
        W = X[:25]
        mu1 = ordered.raw_surfaces(W)[:, 0]
        p1 = multinom.raw_surfaces(W)[:, 0]
        assert np.max(np.abs(mu1 - p1)) < 1e-12
        # ordered class-2 probability is the exact complement before scaling
        probs, _ = cumulative_to_probabilities(mu1.reshape(-1, 1))
        assert np.max(np.abs(probs[:, 1] - (1 - p1))) < 1e-12

    def test_multinomial_trees_match_ocf_trees(self, small_dataset,
                                               small_params, honest_model,
                                               multinomial_baseline):
        # same indicator, same streams: identical structures per class
        for f_ocf, f_mml in zip(honest_model.forests,
                                multinomial_baseline.forests):
            for t1, t2 in zip(f_ocf.trees, f_mml.trees):
                assert np.array_equal(t1.feature, t2.feature)
                assert np.array_equal(t1.threshold, t2.threshold)
                assert np.array_equal(t1.grown_on, t2.grown_on)


class TestCumulativeToProbabilities:
    def test_truncation_then_normalization_example(self):
        probs, fallback = cumulative_to_probabilities(np.array([[0.3, 0.2]]))
        assert fallback == 0
        assert probs[0] == pytest.approx([0.3 / 1.1, 0.0, 0.8 / 1.1])

    def test_monotone_input_untouched(self):
        probs, fallback = cumulative_to_probabilities(np.array([[0.2, 0.7]]))
        assert fallback == 0
        assert probs[0] == pytest.approx([0.2, 0.5, 0.3])

    def test_all_zero_rows_fall_back_to_uniform(self):
        probs, fallback = cumulative_to_probabilities(np.array([[0.0, 1.0]]))
        assert fallback == 1
        assert probs[0] == pytest.approx([1 / 3, 1 / 3, 1 / 3])


class TestPredictBaseline:
    def test_rows_on_simplex(self, ordered_baseline, multinomial_baseline,
                             small_dataset):
        W = small_dataset.covariates[:60]
        for model in (ordered_baseline, multinomial_baseline):
            p = predict_baseline(model, W)
            assert np.all(p >= 0)
            assert np.abs(p.sum(axis=1) - 1).max() < 1e-9

    def test_single_point_shape(self, ordered_baseline, small_dataset):
        p = predict_baseline(ordered_baseline, small_dataset.covariates[0])
        assert p.shape == (3,)

    def test_model_predict_method_delegates(self, ordered_baseline,
                                            small_dataset):
        W = small_dataset.covariates[:5]
        assert np.array_equal(ordered_baseline.predict(W),
                              predict_baseline(ordered_baseline, W))


class TestExternalPredictions:
    def test_load_valid_file(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("p1,p2,p3\n0.2,0.5,0.3\n0.1,0.1,0.8\n")
        P = load_external_predictions(str(path), n_rows=2, n_classes=3)
        assert P.shape == (2, 3)

    def test_headerless_file(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("0.25,0.25,0.5\n")
        P = load_external_predictions(str(path))
        assert P.shape == (1, 3)

    def test_off_simplex_rejected(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("0.5,0.6,0.1\n")
        with pytest.raises(DataError, match="simplex"):
            load_external_predictions(str(path))

    def test_negative_rejected(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("-0.2,0.7,0.5\n")
        with pytest.raises(DataError, match="negative"):
            load_external_predictions(str(path))

    def test_wrong_shape_rejected(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("0.5,0.5\n")
        with pytest.raises(DataError, match="columns"):
            load_external_predictions(str(path), n_classes=3)

    def test_tolerance_respected(self, tmp_path):
        path = tmp_path / "ext.csv"
        path.write_text("0.2000004,0.5,0.3\n")
        P = load_external_predictions(str(path))
        assert P.shape == (1, 3)
