"""Weight-based inference: standard errors for probabilities and effects.

Honest predictions are weighted averages of honest-sample class indicators,
so their variance is |S_hon| times the sample variance of the weighted terms.
Marginal effects difference the weights of two evaluation points, giving the
analogous variance formula with the squared step width in the denominator for
continuous covariates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .data import CONTINUOUS, DISCRETE


class InferenceError(ValueError):
    """Raised when a variance or effect cannot be computed as requested."""


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Per-honest-row forest weights for one class at one query point."""

    point: np.ndarray
    m: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise InferenceError("weights must be a vector over the honest sample")
        if (w < -1e-12).any():
            raise InferenceError("forest weights must be non-negative")
        object.__setattr__(self, "weights", w)

    def total(self):
        return float(self.weights.sum())


@dataclass(frozen=True)
class PredictionWithSe:
    """Honest probability estimate with its weight-based standard error."""

    estimate: float
    se: float
    m: int


@dataclass(frozen=True)
class MarginalEffectRow:
    covariate: str
    feature: int
    m: int
    effect: float
    se: float
    z: float
    p_value: float
    ci_lo: float
    ci_hi: float
    eval_up: float
    eval_down: float


@dataclass(frozen=True)
class MarginalEffectTable:
    """All covariate-by-class marginal effects at one evaluation point."""

    at: str
    point: np.ndarray
    omega: float
    level: float
    rows: tuple

    CSV_HEADER = ("covariate,class,effect,se,z,p_value,ci_lo,ci_hi,"
                  "eval_up,eval_down")

    def to_csv(self):
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.covariate},{r.m},{r.effect!r},{r.se!r},{r.z!r},"
                f"{r.p_value!r},{r.ci_lo!r},{r.ci_hi!r},{r.eval_up!r},"
                f"{r.eval_down!r}"
            )
        return "\n".join(lines) + "\n"

    def format(self):
        head = (f"marginal effects at {self.at} "
                f"(omega={self.omega}, level={self.level:.0%})")
        lines = [head, "-" * len(head)]
        lines.append(f"{'covariate':<14}{'class':>6}{'effect':>12}{'se':>10}"
                     f"{'ci_lo':>12}{'ci_hi':>12}")
        for r in self.rows:
            lines.append(
                f"{r.covariate:<14}{r.m:>6}{r.effect:>12.5f}{r.se:>10.5f}"
                f"{r.ci_lo:>12.5f}{r.ci_hi:>12.5f}"
            )
        return "\n".join(lines)


def sample_variance(x):
    """Unbiased (n-1 denominator) sample variance."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise InferenceError("sample variance needs at least 2 observations")
    return float(np.var(x, ddof=1))


def variance_from_weights(weights, indicator, n_honest=None):
    """Variance of a weighted honest average: |S_hon| * Var(alpha_i * z_i)."""
    weights = np.asarray(weights, dtype=np.float64)
    indicator = np.asarray(indicator, dtype=np.float64)
    n = weights.size if n_honest is None else n_honest
    return n * sample_variance(weights * indicator)


def variance_probability(model, m, w):
    """Honest class-m probability at w with its standard error."""
    if not model.is_honest:
        raise InferenceError("variance requires a model fitted with honesty")
    if model.n_honest < 2:
        raise InferenceError("variance requires at least 2 honest observations")
    alphas = model.class_weights(m, np.asarray(w, dtype=np.float64))[0]
    z = model.honest_indicator(m)
    estimate = float(alphas @ z)
    var = variance_from_weights(alphas, z)
    return PredictionWithSe(estimate=estimate, se=math.sqrt(var), m=m)


def predictions_with_se(model, W):
    """Normalized probability matrix plus per-class raw-prediction ses.

    Returns (probs, ses), each of shape (Q, M). The standard errors apply to
    the raw honest per-class predictions (the quantities the weight-based
    variance formula is defined for); probabilities follow the model's
    normalization setting.
    """
    if not model.is_honest:
        raise InferenceError("variance requires a model fitted with honesty")
    if model.n_honest < 2:
        raise InferenceError("variance requires at least 2 honest observations")
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W.reshape(1, -1)
    probs = model.predict(W)
    ses = np.empty_like(probs)
    n_hon = model.n_honest
    for m in range(1, model.n_classes + 1):
        alphas = model.class_weights(m, W)
        x = alphas * model.honest_indicator(m)[None, :]
        ses[:, m - 1] = np.sqrt(n_hon * np.var(x, axis=1, ddof=1))
    return probs, ses


def discrete_step_points(w_j, observed_min):
    """Up/down integer contrast for a discrete covariate value.

    Non-integers round up and down. For an integer value the contrast is one
    unit downwards (w_j vs w_j - 1), or upwards when w_j sits at the observed
    minimum.
    """
    up = math.ceil(w_j)
    down = math.floor(w_j)
    if up == down:
        if w_j <= observed_min:
            return w_j + 1.0, float(w_j)
        return float(w_j), w_j - 1.0
    return float(up), float(down)


def effect_points(meta_j, w_j, omega):
    """Evaluation points and denominator for one covariate's effect.

    Continuous columns step omega standard deviations each way, clamped to the
    observed support, and divide by the post-clamp width. Discrete columns use
    a unit integer contrast with denominator one.
    """
    if meta_j.kind == CONTINUOUS:
        if omega is None or omega <= 0:
            raise InferenceError("omega must be positive for continuous covariates")
        up = min(w_j + omega * meta_j.std_dev, meta_j.observed_max)
        down = max(w_j - omega * meta_j.std_dev, meta_j.observed_min)
        if up <= down:
            raise InferenceError(
                "evaluation step collapsed: covariate support has zero width"
            )
        return up, down, up - down
    up, down = discrete_step_points(w_j, meta_j.observed_min)
    if up == down:
        raise InferenceError(
            "evaluation step collapsed: discrete covariate has a single level"
        )
    return up, down, 1.0


def _point_pair(w, j, up, down):
    pts = np.tile(np.asarray(w, dtype=np.float64), (2, 1))
    pts[0, j] = up
    pts[1, j] = down
    return pts


def marginal_effect(model, j, w, omega=None):
    """Per-class marginal effect of covariate j at w via model predictions.

    Uses the model's prediction operator (normalized when the model
    normalizes), so effects sum to zero across classes in that case. Returns
    (effects, up, down) with effects of length M.
    """
    w = np.asarray(w, dtype=np.float64)
    omega = model.params.omega if omega is None else omega
    meta = model.column_meta[j]
    up, down, denom = effect_points(meta, w[j], omega)
    pts = _point_pair(w, j, up, down)
    probs = model.predict(pts)
    effects = (probs[0] - probs[1]) / denom
    return effects, up, down


def me_weights(model, m, j, w, omega=None):
    """Transformed weights: alpha(up) - alpha(down) for covariate j, class m.

    The transformed weights sum to zero, and their indicator-weighted sum over
    the denominator reproduces the raw (unnormalized) marginal effect.
    Returns (weights, up, down, denom).
    """
    if not model.is_honest:
        raise InferenceError("effect weights require a model fitted with honesty")
    w = np.asarray(w, dtype=np.float64)
    omega = model.params.omega if omega is None else omega
    meta = model.column_meta[j]
    up, down, denom = effect_points(meta, w[j], omega)
    alphas = model.class_weights(m, _point_pair(w, j, up, down))
    return alphas[0] - alphas[1], up, down, denom


def weighted_marginal_effect(model, m, j, w, omega=None):
    """Raw weight-route effect and standard error for covariate j, class m.

    Effect is the transformed-weight average of the class indicator divided by
    the step width; the variance is |S_hon| / denom^2 times the sample
    variance of the weighted terms. Returns (effect, se, up, down).
    """
    diff, up, down, denom = me_weights(model, m, j, w, omega=omega)
    z = model.honest_indicator(m)
    effect = float(diff @ z) / denom
    var = variance_from_weights(diff, z) / (denom * denom)
    return effect, math.sqrt(var), up, down


def variance_marginal_effect(model, m, j, w, omega=None):
    """Standard error of the covariate-j, class-m marginal effect at w."""
    _, se, _, _ = weighted_marginal_effect(model, m, j, w, omega=omega)
    return se


def confidence_interval(estimate, se, level=0.95):
    """Symmetric normal-quantile confidence interval."""
    if se < 0:
        raise InferenceError("standard error must be non-negative")
    if not 0.0 <= level < 1.0:
        raise InferenceError(f"confidence level must lie in [0, 1), got {level}")
    zq = norm.ppf(0.5 + level / 2.0)
    half = zq * se
    return estimate - half, estimate + half


def margins(model, at="mean", point=None, omega=None, level=0.95):
    """Full marginal-effect table at the mean, median or a custom point.

    Effects come from the model's prediction operator; standard errors come
    from the transformed honest weights. Requires an honest model.
    """
    if not model.is_honest:
        raise InferenceError("marginal-effect inference requires an honest model")
    if at == "mean":
        w = model.eval_mean
    elif at == "median":
        w = model.eval_median
    elif at == "point":
        w = np.asarray(point, dtype=np.float64)
        if w.shape != (model.n_covariates,):
            raise InferenceError(
                f"custom point must have length {model.n_covariates}"
            )
    else:
        raise InferenceError(f"unknown evaluation point kind {at!r}")
    omega = model.params.omega if omega is None else omega
    rows = []
    for j in range(model.n_covariates):
        effects, up, down = marginal_effect(model, j, w, omega=omega)
        for m in range(1, model.n_classes + 1):
            se = variance_marginal_effect(model, m, j, w, omega=omega)
            eff = float(effects[m - 1])
            if se > 0:
                zstat = eff / se
                p = 2.0 * (1.0 - norm.cdf(abs(zstat)))
            else:
                zstat = math.nan
                p = math.nan
            lo, hi = confidence_interval(eff, se, level)
            rows.append(MarginalEffectRow(
                covariate=model.column_names[j], feature=j, m=m, effect=eff,
                se=se, z=zstat, p_value=p, ci_lo=lo, ci_hi=hi, eval_up=up,
                eval_down=down,
            ))
    return MarginalEffectTable(at=at, point=np.asarray(w, dtype=np.float64),
                               omega=omega, level=level, rows=tuple(rows))
