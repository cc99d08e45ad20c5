import numpy as np
import pytest

from ocforest import ForestParams, compute_thresholds, fit, fit_baseline, simulate_sample
from ocforest.baselines import KIND_MULTINOMIAL, KIND_ORDERED


@pytest.fixture(scope="session")
def thresholds_d1():
    return compute_thresholds(1, 123)


@pytest.fixture(scope="session")
def small_dataset(thresholds_d1):
    return simulate_sample(1, thresholds_d1, 300, 17)


@pytest.fixture(scope="session")
def small_params():
    return ForestParams(n_trees=40, seed=5)


@pytest.fixture(scope="session")
def honest_model(small_dataset, small_params):
    return fit(small_dataset, small_params)


@pytest.fixture(scope="session")
def adaptive_model(small_dataset, small_params):
    from dataclasses import replace
    return fit(small_dataset, replace(small_params, honest_fraction=0.0))


@pytest.fixture(scope="session")
def ordered_baseline(small_dataset, small_params):
    return fit_baseline(small_dataset, KIND_ORDERED, small_params)


@pytest.fixture(scope="session")
def multinomial_baseline(small_dataset, small_params):
    return fit_baseline(small_dataset, KIND_MULTINOMIAL, small_params)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(99)
