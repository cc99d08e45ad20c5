import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocforest.data import (
    CONTINUOUS,
    DISCRETE,
    DataError,
    Dataset,
    evaluation_points,
    from_arrays,
    infer_kinds,
    load_csv,
    split_honest,
)


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCsv:
    def test_basic_load(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,b,y\n0.5,1,1\n1.5,0,2\n2.5,1,3\n3.5,0,2\n")
        ds = load_csv(p, "y")
        assert ds.n_classes == 3
        assert ds.n_rows == 4
        assert ds.column_names == ("a", "b")
        assert ds.outcome.tolist() == [1, 2, 3, 2]

    def test_missing_class_rejected(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,y\n1,1\n2,3\n3,1\n")
        with pytest.raises(DataError, match="class 2 absent"):
            load_csv(p, "y")

    def test_unknown_outcome_column(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,b\n1,2\n3,4\n")
        with pytest.raises(DataError, match="'y'"):
            load_csv(p, "y")

    def test_missing_file(self):
        with pytest.raises(DataError, match="no such file"):
            load_csv("/nonexistent/file.csv", "y")

    def test_non_numeric_cell(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,y\n1,1\nfoo,2\n")
        with pytest.raises(DataError, match="non-numeric value 'foo'"):
            load_csv(p, "y")

    def test_missing_value(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,y\n1,1\n,2\n")
        with pytest.raises(DataError, match="missing value"):
            load_csv(p, "y")

    def test_non_integer_outcome(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,y\n1,1.5\n2,2\n")
        with pytest.raises(DataError, match="not a positive integer"):
            load_csv(p, "y")

    def test_integral_float_outcome_accepted(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "a,y\n1,1.0\n2,2.0\n")
        ds = load_csv(p, "y")
        assert ds.outcome.tolist() == [1, 2]


class TestInferKinds:
    def test_binary_column_is_discrete(self):
        ds = from_arrays(np.array([[0.0], [1.0], [0.0], [1.0]]), [1, 2, 1, 2])
        meta = ds.column_meta[0]
        assert meta.kind == DISCRETE
        assert meta.observed_min == 0.0
        assert meta.observed_max == 1.0

    def test_fractional_column_is_continuous(self):
        ds = from_arrays(np.array([[0.5], [1.2], [3.3]]), [1, 2, 2])
        assert ds.column_meta[0].kind == CONTINUOUS

    def test_many_integer_levels_become_continuous(self):
        col = np.arange(60.0).reshape(-1, 1)
        y = np.tile([1, 2], 30)
        ds = from_arrays(col, y, max_discrete_levels=10)
        assert ds.column_meta[0].kind == CONTINUOUS

    def test_idempotent(self, small_dataset):
        again = infer_kinds(small_dataset)
        assert again.column_meta == small_dataset.column_meta

    def test_std_dev_uses_sample_denominator(self):
        ds = from_arrays(np.array([[1.0], [2.0], [3.0]]), [1, 2, 2])
        assert ds.column_meta[0].std_dev == pytest.approx(1.0)


class TestDatasetInvariants:
    def test_rejects_out_of_range_labels(self):
        with pytest.raises(DataError, match="labels"):
            Dataset(np.zeros((3, 1)), np.array([1, 2, 5]), 3,
                    (None,), ("a",))

    def test_rejects_nan(self):
        X = np.array([[1.0], [np.nan], [2.0]])
        with pytest.raises(DataError, match="missing"):
            from_arrays(X, [1, 2, 1])

    def test_arrays_frozen(self, small_dataset):
        with pytest.raises(ValueError):
            small_dataset.covariates[0, 0] = 99.0


class TestSplitHonest:
    def test_even_split(self, small_dataset):
        s = split_honest(small_dataset, 0.5, 3)
        assert s.honest_indices.size == 150
        assert s.train_indices.size == 150

    def test_odd_sample_surplus_goes_honest(self):
        ds = from_arrays(np.arange(14.0).reshape(7, 2), [1, 2, 1, 2, 1, 2, 1])
        s = split_honest(ds, 0.5, 1)
        assert s.honest_indices.size == 4
        assert s.train_indices.size == 3

    def test_deterministic(self, small_dataset):
        a = split_honest(small_dataset, 0.5, 7)
        b = split_honest(small_dataset, 0.5, 7)
        assert np.array_equal(a.honest_indices, b.honest_indices)
        assert np.array_equal(a.train_indices, b.train_indices)

    def test_partition_covers_everything(self, small_dataset):
        s = split_honest(small_dataset, 0.3, 11)
        merged = np.sort(np.concatenate([s.train_indices, s.honest_indices]))
        assert np.array_equal(merged, np.arange(small_dataset.n_rows))

    def test_rare_class_forced_into_honest_side(self):
        X = np.arange(8.0).reshape(4, 2)
        ds = from_arrays(X, [1, 1, 1, 2])
        for seed in range(20):
            s = split_honest(ds, 0.5, seed)
            assert 3 in s.honest_indices

    def test_all_classes_present_in_honest_side(self, small_dataset):
        for seed in range(5):
            s = split_honest(small_dataset, 0.2, seed)
            y_hon = small_dataset.outcome[s.honest_indices]
            assert np.unique(y_hon).size == small_dataset.n_classes

    def test_too_small_honest_side_rejected(self):
        ds = from_arrays(np.arange(16.0).reshape(8, 2), [1, 1, 1, 1, 1, 1, 2, 3])
        with pytest.raises(DataError, match="cannot hold all"):
            split_honest(ds, 0.25, 0)

    def test_retry_exhaustion_reported(self):
        # honest side of 4 must catch three singleton classes: feasible but
        # unlikely per draw, so some seeds exhaust the retry budget
        y = [1] * 13 + [2, 3, 4]
        X = np.arange(32.0).reshape(16, 2)
        ds = from_arrays(X, y)
        failing_seed = None
        for seed in range(200):
            try:
                split_honest(ds, 0.25, seed)
            except DataError:
                failing_seed = seed
                break
        assert failing_seed is not None
        with pytest.raises(DataError, match="100 attempts"):
            split_honest(ds, 0.25, failing_seed)

    def test_stratified_always_covers_classes(self):
        y = [1] * 13 + [2, 3, 4]
        X = np.arange(32.0).reshape(16, 2)
        ds = from_arrays(X, y)
        for seed in range(20):
            s = split_honest(ds, 0.25, seed, stratify=True)
            assert np.unique(ds.outcome[s.honest_indices]).size == 4

    @given(st.integers(0, 10_000), st.integers(10, 60))
    @settings(max_examples=40, deadline=None)
    def test_partition_property(self, seed, n):
        y = np.tile([1, 2], (n + 1) // 2)[:n]
        ds = from_arrays(np.arange(2.0 * n).reshape(n, 2), y)
        s = split_honest(ds, 0.5, seed)
        merged = np.sort(np.concatenate([s.train_indices, s.honest_indices]))
        assert np.array_equal(merged, np.arange(n))


class TestEvaluationPoints:
    def test_mean(self):
        ds = from_arrays(np.array([[1.0], [2.0], [3.0]]), [1, 2, 2])
        assert evaluation_points(ds, "mean")[0] == pytest.approx(2.0)

    def test_median_not_rounded(self):
        ds = from_arrays(np.array([[0.0], [1.0], [1.0]]), [1, 2, 2])
        assert evaluation_points(ds, "median")[0] == pytest.approx(1.0)

    def test_mean_of_discrete_column_not_rounded(self):
        ds = from_arrays(np.array([[0.0], [1.0], [1.0]]), [1, 2, 2])
        assert evaluation_points(ds, "mean")[0] == pytest.approx(2.0 / 3.0)

    def test_custom_wrong_length(self, small_dataset):
        with pytest.raises(DataError, match="length"):
            evaluation_points(small_dataset, "custom", point=[1.0, 2.0])

    def test_custom_passthrough(self, small_dataset):
        w = np.zeros(small_dataset.n_covariates)
        out = evaluation_points(small_dataset, "custom", point=w)
        assert np.array_equal(out, w)
