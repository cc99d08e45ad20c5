"""Ordered correlation forest.

Honest per-class random forests for ordered categorical outcomes. Each class
gets its own forest whose splitting criterion accounts for the error
correlation between adjacent cumulative probability surfaces; honest leaf
values admit weight-based standard errors for predicted probabilities and
covariate marginal effects. Ships with multinomial/ordered forest baselines,
synthetic designs with an exact truth oracle, and a Monte Carlo /
cross-validation evaluation harness.
"""

__version__ = "0.1.0"

from .baselines import (
    BaselineModel,
    cumulative_to_probabilities,
    fit_baseline,
    load_external_predictions,
    predict_baseline,
)
from .data import (
    CovariateKind,
    DataError,
    Dataset,
    HonestSplit,
    evaluation_points,
    from_arrays,
    infer_kinds,
    load_csv,
    split_honest,
)
from .evaluation import (
    CoverageReport,
    MetricReport,
    coverage_study,
    cross_validate,
    metrics_observed,
    metrics_synthetic,
    monte_carlo,
)
from .forest import (
    ClassForest,
    FitError,
    ForestParams,
    OcfModel,
    Tree,
    audit_model,
    compute_weights,
    fill_honest_leaves,
    fit,
    grow_tree,
    predict,
    tree_predict,
)
from .inference import (
    InferenceError,
    MarginalEffectTable,
    PredictionWithSe,
    WeightVector,
    confidence_interval,
    marginal_effect,
    margins,
    me_weights,
    predictions_with_se,
    variance_marginal_effect,
    variance_probability,
    weighted_marginal_effect,
)
from .model_io import load_model, save_model
from .splitting import (
    NodeStats,
    SplitCandidate,
    best_split,
    child_score,
    node_ec,
    node_mse,
    node_mu,
)
from .synthetic import (
    Design,
    Thresholds,
    TruthOracle,
    compute_thresholds,
    make_oracle,
    regression_function,
    simulate_sample,
    true_marginal_effect,
    true_probabilities,
)

__all__ = [
    "BaselineModel", "ClassForest", "CoverageReport", "CovariateKind",
    "DataError", "Dataset", "Design", "FitError", "ForestParams",
    "HonestSplit", "InferenceError", "MarginalEffectTable", "MetricReport",
    "NodeStats", "OcfModel", "PredictionWithSe", "SplitCandidate",
    "Thresholds", "Tree", "TruthOracle", "WeightVector", "audit_model",
    "best_split", "child_score", "compute_thresholds", "compute_weights",
    "confidence_interval", "coverage_study", "cross_validate",
    "cumulative_to_probabilities", "evaluation_points", "fill_honest_leaves",
    "fit", "fit_baseline", "from_arrays", "grow_tree", "infer_kinds",
    "load_csv", "load_external_predictions", "load_model", "make_oracle",
    "marginal_effect", "margins", "me_weights", "metrics_observed",
    "metrics_synthetic", "monte_carlo", "node_ec", "node_mse", "node_mu",
    "predict", "predict_baseline", "predictions_with_se",
    "regression_function", "save_model", "simulate_sample", "split_honest",
    "tree_predict", "true_marginal_effect", "true_probabilities",
    "variance_marginal_effect", "variance_probability",
    "weighted_marginal_effect",
]
