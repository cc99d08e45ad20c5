"""Synthetic designs with an exact oracle for probabilities and effects.

Latent outcomes are g(W) + e with standard-logistic e and six covariates:
three standard normals (columns 1, 3, 5) and three Bernoulli(0.4) indicators
(columns 2, 4, 6). Three regression functions of increasing non-linearity are
provided; latent outcomes are cut into three classes at the 0.33 and 0.66
quantiles of a large latent draw so class shares are roughly equal.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._rng import substream
from .data import from_arrays
from .inference import discrete_step_points

N_COVARIATES = 6
N_CLASSES = 3
BETA = np.array([1.0, 1.0, 0.5, 0.5, 0.0, 0.0])
CONTINUOUS_COLUMNS = (0, 2, 4)
DISCRETE_COLUMNS = (1, 3, 5)
BERNOULLI_P = 0.4
QUANTILE_NUMERATORS = (33, 66)  # thresholds sit at 33% and 66% of latent draws
THRESHOLD_DRAWS = 1_000_000


@dataclass(frozen=True)
class Design:
    """One of the three synthetic regression designs."""

    design_id: int

    def __post_init__(self):
        if self.design_id not in (1, 2, 3):
            raise ValueError(f"design must be 1, 2 or 3, got {self.design_id}")

    @property
    def beta(self):
        return BETA


@dataclass(frozen=True)
class Thresholds:
    """Latent cut points; the outer thresholds are -inf and +inf."""

    zeta1: float
    zeta2: float

    def __post_init__(self):
        if not self.zeta1 < self.zeta2:
            raise ValueError(
                f"thresholds must be increasing, got {self.zeta1}, {self.zeta2}"
            )

    def as_array(self):
        return np.array([self.zeta1, self.zeta2])


def _as_design(design):
    return design if isinstance(design, Design) else Design(int(design))


def regression_function(design, w):
    """Latent regression value(s) g(w) for one point or a matrix of points."""
    design = _as_design(design)
    W = np.asarray(w, dtype=np.float64)
    single = W.ndim == 1
    if single:
        W = W.reshape(1, -1)
    if W.ndim != 2 or W.shape[1] != N_COVARIATES:
        raise ValueError(f"points must have {N_COVARIATES} columns, got {W.shape}")
    if design.design_id == 1:
        g = W @ BETA
    elif design.design_id == 2:
        g = np.sin(2.0 * W) @ BETA
    else:
        g = 2.0 * np.sin(W @ BETA)
    return float(g[0]) if single else g


def _regression_gradient(design, w, j):
    """dg/dw_j at a single point, per design."""
    design = _as_design(design)
    w = np.asarray(w, dtype=np.float64)
    if design.design_id == 1:
        return BETA[j]
    if design.design_id == 2:
        return 2.0 * math.cos(2.0 * w[j]) * BETA[j]
    return 2.0 * math.cos(float(w @ BETA)) * BETA[j]


def draw_covariates(n, rng):
    """Sample the covariate matrix: columns alternate normal / Bernoulli."""
    W = np.empty((n, N_COVARIATES))
    for j in range(N_COVARIATES):
        if j in CONTINUOUS_COLUMNS:
            W[:, j] = rng.standard_normal(n)
        else:
            W[:, j] = (rng.random(n) < BERNOULLI_P).astype(np.float64)
    return W


def _draw_logistic(n, rng):
    # inverse-CDF sampling; rng.random() is in [0, 1), so guard only u = 0
    u = np.maximum(rng.random(n), 2.0 ** -53)
    return np.log(u) - np.log1p(-u)


def draw_latent(design, n, rng):
    """Covariates and latent outcomes g(W) + e."""
    W = draw_covariates(n, rng)
    eps = _draw_logistic(n, rng)
    return W, regression_function(design, W) + eps


def compute_thresholds(design, seed, n_draws=THRESHOLD_DRAWS):
    """Empirical 33% / 66% latent quantiles from a large fresh draw.

    Uses the type-1 (order statistic at ceil(q*N)) empirical quantile; the
    index is computed in exact integer arithmetic.
    """
    rng = substream(seed)
    _, ystar = draw_latent(_as_design(design), n_draws, rng)
    idx = [-((-q * n_draws) // 100) - 1 for q in QUANTILE_NUMERATORS]
    part = np.partition(ystar, idx)
    return Thresholds(zeta1=float(part[idx[0]]), zeta2=float(part[idx[1]]))


def discretize(ystar, thresholds):
    """Latent values to class labels via the interval rule."""
    ystar = np.asarray(ystar, dtype=np.float64)
    return (1 + (ystar > thresholds.zeta1).astype(np.int64)
            + (ystar > thresholds.zeta2).astype(np.int64))


def simulate_sample(design, thresholds, n, seed):
    """Draw a synthetic Dataset of n observations, deterministic in seed."""
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    rng = substream(seed)
    W, ystar = draw_latent(_as_design(design), n, rng)
    y = discretize(ystar, thresholds)
    return from_arrays(W, y, n_classes=N_CLASSES)


def _logistic_pdf(x):
    # expit(x) * expit(-x) is overflow-safe on both tails
    return expit(x) * expit(-x)


@dataclass(frozen=True)
class TruthOracle:
    """Exact class probabilities and marginal effects for one design."""

    design: Design
    thresholds: Thresholds

    def probabilities(self, w):
        """Exact p_m(w): logistic CDF differences between adjacent cut points."""
        W = np.asarray(w, dtype=np.float64)
        single = W.ndim == 1
        g = np.atleast_1d(regression_function(self.design, W))
        F1 = expit(self.thresholds.zeta1 - g)
        F2 = expit(self.thresholds.zeta2 - g)
        p = np.stack([F1, F2 - F1, 1.0 - F2], axis=-1)
        return p[0] if single else p

    def marginal_effects(self, j, w):
        """Exact per-class effect of covariate j at a single point w.

        Continuous columns use the analytic chain-rule derivative; discrete
        columns use the same unit integer contrast as the estimator
        (support minimum 0 for the Bernoulli columns).
        """
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 1 or w.size != N_COVARIATES:
            raise ValueError(f"point must have length {N_COVARIATES}")
        if j in CONTINUOUS_COLUMNS:
            g = regression_function(self.design, w)
            dg = _regression_gradient(self.design, w, j)
            f1 = _logistic_pdf(self.thresholds.zeta1 - g)
            f2 = _logistic_pdf(self.thresholds.zeta2 - g)
            # dp_m/dg = f(zeta_{m-1} - g) - f(zeta_m - g), with f(+-inf) = 0
            return np.array([-f1, f1 - f2, f2]) * dg
        up, down = discrete_step_points(w[j], observed_min=0.0)
        w_up = w.copy()
        w_up[j] = up
        w_down = w.copy()
        w_down[j] = down
        return self.probabilities(w_up) - self.probabilities(w_down)


def true_probabilities(oracle, w):
    return oracle.probabilities(w)


def true_marginal_effect(oracle, j, w):
    return oracle.marginal_effects(j, w)


def make_oracle(design, thresholds):
    return TruthOracle(design=_as_design(design), thresholds=thresholds)
