"""Per-class honest forests: growth, honest leaf values, prediction, weights.

A fitted model holds one forest per outcome class. Trees are grown on
subsamples of the training side only; leaf values and forest weights come from
the honest side, which is what licenses the weight-based variance formulas in
`inference`. With honest_fraction = 0 the model is adaptive: leaf values come
from each tree's own subsample and no weights/inference are available.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import _kernels
from ._rng import STREAM_TREES, round_half_up, substream
from .data import HonestSplit, evaluation_points, split_honest
from .inference import WeightVector

INDICATOR_EQUAL = "equal"
INDICATOR_CUMULATIVE = "cumulative"


class FitError(ValueError):
    """Raised when a model cannot be fitted with the requested parameters."""


class AuditError(AssertionError):
    """Raised when a structural audit of a fitted model fails."""


@dataclass(frozen=True)
class ForestParams:
    """Tuning knobs shared by all forests of a model.

    mtry=None resolves to ceil(sqrt(k)) at fit time. honest_fraction=0 fits an
    adaptive model (no honest side, no weight-based inference).
    """

    n_trees: int = 1000
    subsample_fraction: float = 0.5
    mtry: int | None = None
    alpha: float = 0.05
    min_leaf: int = 5
    honest_fraction: float = 0.5
    omega: float = 0.1
    seed: int = 0
    normalize: bool = True

    def validate(self, n_covariates=None):
        if self.n_trees < 1:
            raise FitError(f"n_trees must be at least 1, got {self.n_trees}")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise FitError(
                f"subsample_fraction must lie in (0, 1], got {self.subsample_fraction}"
            )
        if not 0.0 < self.alpha <= 0.5:
            raise FitError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if self.alpha > 0.2:
            warnings.warn(
                f"alpha={self.alpha} exceeds the 0.2 regularity requirement for "
                "asymptotic normality; proceeding anyway",
                UserWarning,
                stacklevel=2,
            )
        if self.min_leaf < 1:
            raise FitError(f"min_leaf must be at least 1, got {self.min_leaf}")
        if not 0.0 <= self.honest_fraction < 1.0:
            raise FitError(
                f"honest_fraction must lie in [0, 1), got {self.honest_fraction}"
            )
        if self.omega <= 0.0:
            raise FitError(f"omega must be positive, got {self.omega}")
        if self.mtry is not None and n_covariates is not None:
            if not 1 <= self.mtry <= n_covariates:
                raise FitError(
                    f"mtry must lie in [1, {n_covariates}], got {self.mtry}"
                )

    def resolved_mtry(self, n_covariates):
        if self.mtry is not None:
            return int(self.mtry)
        return int(math.ceil(math.sqrt(n_covariates)))


@dataclass(frozen=True, eq=False)
class Tree:
    """One grown tree; leaves carry value-sample slices after filling.

    Node arrays are in depth-first preorder, so every subtree occupies the
    contiguous id range [nid, sub_end[nid]). value_rows holds positions into
    the value sample (honest sample, or the tree's own subsample when
    adaptive) grouped by leaf; slice_start/slice_end index into it per node,
    with empty leaves pointing at the block of their deepest non-empty
    ancestor.
    """

    m: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    parent: np.ndarray
    sub_end: np.ndarray
    grown_on: np.ndarray
    value_rows: np.ndarray | None = None
    slice_start: np.ndarray | None = None
    slice_end: np.ndarray | None = None
    leaf_value: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def filled(self):
        return self.leaf_value is not None


@dataclass(eq=False)
class ClassForest:
    """All trees estimating one class surface."""

    m: int
    indicator: str
    trees: list
    _flat: dict = field(default=None, repr=False)

    @property
    def n_trees(self):
        return len(self.trees)

    def flat(self):
        """Concatenated node arrays across trees for the batched kernels."""
        if self._flat is None:
            self._flat = _flatten_trees(self.trees)
        return self._flat


@dataclass(eq=False)
class OcfModel:
    """Fitted ordered correlation forest: one class forest per class 1..M."""

    n_classes: int
    forests: list
    params: ForestParams
    honest_split: HonestSplit | None
    honest_outcomes: np.ndarray | None
    column_meta: tuple
    column_names: tuple
    eval_mean: np.ndarray
    eval_median: np.ndarray
    stratify_honest: bool = False
    kind: str = "ocf"

    @property
    def is_honest(self):
        return self.honest_split is not None

    @property
    def n_covariates(self):
        return len(self.column_meta)

    @property
    def n_honest(self):
        return 0 if self.honest_split is None else self.honest_split.honest_indices.size

    def predict(self, w, normalize=None):
        return predict(self, w, normalize=normalize)

    def raw_predictions(self, W):
        """Per-class forest averages before any normalization, shape (Q, M)."""
        W = _as_query_matrix(W, self.n_covariates)
        out = np.empty((W.shape[0], self.n_classes))
        for idx, forest in enumerate(self.forests):
            out[:, idx] = _forest_raw(forest, W)
        return out

    def class_weights(self, m, W):
        """Honest forest weights for class m at each query row, (Q, n_honest)."""
        if not self.is_honest:
            raise FitError("forest weights require a model fitted with honesty")
        W = _as_query_matrix(W, self.n_covariates)
        return _forest_weights(self.forests[m - 1], W, self.n_honest)

    def honest_indicator(self, m):
        """1(Y_i = m) over the honest sample, aligned with weight positions."""
        if self.honest_outcomes is None:
            raise FitError("model carries no honest outcomes")
        return (self.honest_outcomes == m).astype(np.float64)


def _as_query_matrix(w, k):
    W = np.asarray(w, dtype=np.float64)
    single = W.ndim == 1
    if single:
        W = W.reshape(1, -1)
    if W.ndim != 2 or W.shape[1] != k:
        raise ValueError(f"query points must have {k} columns, got shape {W.shape}")
    return np.ascontiguousarray(W)


def _flatten_trees(trees):
    n_nodes = np.array([t.n_nodes for t in trees], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(n_nodes)))
    feature = np.concatenate([t.feature for t in trees])
    threshold = np.concatenate([t.threshold for t in trees])
    left = np.concatenate([t.left for t in trees])
    right = np.concatenate([t.right for t in trees])
    for b in range(len(trees)):
        lo, hi = offsets[b], offsets[b + 1]
        seg_l = left[lo:hi]
        seg_r = right[lo:hi]
        seg_l[seg_l >= 0] += lo
        seg_r[seg_r >= 0] += lo
    flat = {
        "feature": feature,
        "threshold": threshold,
        "left": left,
        "right": right,
        "roots": offsets[:-1].copy(),
    }
    if all(t.filled for t in trees):
        row_sizes = np.array([t.value_rows.size for t in trees], dtype=np.int64)
        row_offsets = np.concatenate(([0], np.cumsum(row_sizes)))
        flat["slice_start"] = np.concatenate(
            [t.slice_start + row_offsets[b] for b, t in enumerate(trees)]
        )
        flat["slice_end"] = np.concatenate(
            [t.slice_end + row_offsets[b] for b, t in enumerate(trees)]
        )
        flat["grouped_rows"] = np.concatenate([t.value_rows for t in trees])
        flat["leaf_value"] = np.concatenate([t.leaf_value for t in trees])
    return flat


def _forest_raw(forest, W):
    flat = forest.flat()
    acc = _kernels.forest_predict_kernel(
        flat["feature"], flat["threshold"], flat["left"], flat["right"],
        flat["leaf_value"], flat["roots"], W,
    )
    return acc / forest.n_trees


def _forest_weights(forest, W, n_honest):
    flat = forest.flat()
    out = _kernels.forest_weights_kernel(
        flat["feature"], flat["threshold"], flat["left"], flat["right"],
        flat["slice_start"], flat["slice_end"], flat["grouped_rows"],
        flat["roots"], W, n_honest,
    )
    return out / forest.n_trees


def _draw_features(rng, cap, k, mtry):
    """Pre-draw one ascending mtry-subset of {0..k-1} per potential node."""
    u = rng.random((cap, k))
    feats = np.argsort(u, axis=1)[:, :mtry]
    return np.ascontiguousarray(np.sort(feats, axis=1).astype(np.int64))


def grow_tree(covariates, outcomes, subsample_rows, m, params, rng,
              indicator=INDICATOR_EQUAL):
    """Grow one unfilled tree for class surface m on the given subsample.

    Feature subsets of size mtry are drawn from `rng` per split attempt in
    depth-first preorder; structure is deterministic given the stream.
    """
    rows = np.asarray(subsample_rows, dtype=np.int64)
    if rows.size < 2 * params.min_leaf:
        raise FitError(
            f"subsample of {rows.size} rows cannot satisfy two leaves of "
            f"{params.min_leaf}"
        )
    X = np.ascontiguousarray(covariates)
    y = np.asarray(outcomes)
    if indicator == INDICATOR_EQUAL:
        z = (y == m).astype(np.uint8)
    elif indicator == INDICATOR_CUMULATIVE:
        z = (y <= m).astype(np.uint8)
    else:
        raise ValueError(f"unknown indicator {indicator!r}")
    k = X.shape[1]
    mtry = params.resolved_mtry(k)
    cap = _kernels.max_tree_nodes(rows.size, params.min_leaf)
    feats = _draw_features(rng, cap, k, mtry)
    feature, threshold, left, right, parent, sub_end = _kernels.grow_tree_kernel(
        X, z, rows, feats, float(params.alpha), int(params.min_leaf),
    )
    return Tree(
        m=m, feature=feature, threshold=threshold, left=left, right=right,
        parent=parent, sub_end=sub_end, grown_on=rows,
    )


def fill_value_rows(tree, covariates, value_rows, indicator_values):
    """Route the value sample down the tree and attach per-leaf slices.

    `indicator_values` is the 0/1 class indicator aligned with `value_rows`.
    Empty leaves borrow the block of their deepest ancestor holding at least
    one value row, which keeps weights summing to one.
    """
    rows = np.asarray(value_rows, dtype=np.int64)
    z = np.asarray(indicator_values).astype(np.int64)
    if rows.size == 0:
        raise FitError("value sample must be non-empty")
    leaf_of = _kernels.route_rows_kernel(
        tree.feature, tree.threshold, tree.left, tree.right,
        np.ascontiguousarray(covariates), rows,
    )
    order = np.argsort(leaf_of, kind="stable").astype(np.int64)
    sorted_leaves = leaf_of[order]
    n_nodes = tree.n_nodes
    ids = np.arange(n_nodes, dtype=np.int64)
    starts = np.searchsorted(sorted_leaves, ids, side="left")
    ends = np.searchsorted(sorted_leaves, tree.sub_end, side="left")
    slice_start = starts.astype(np.int64)
    slice_end = ends.astype(np.int64)
    empty_leaves = np.flatnonzero((tree.feature < 0) & (starts == ends))
    for nid in empty_leaves:
        a = tree.parent[nid]
        while starts[a] == ends[a]:
            a = tree.parent[a]
        slice_start[nid] = starts[a]
        slice_end[nid] = ends[a]
    pref = np.concatenate(([0], np.cumsum(z[order])))
    count = pref[slice_end] - pref[slice_start]
    size = slice_end - slice_start
    leaf_value = np.zeros(n_nodes)
    nonempty = size > 0
    leaf_value[nonempty] = count[nonempty] / size[nonempty]
    return replace(
        tree, value_rows=order, slice_start=slice_start, slice_end=slice_end,
        leaf_value=leaf_value,
    )


def fill_honest_leaves(tree, covariates, honest_rows, outcomes, m=None,
                       indicator=INDICATOR_EQUAL):
    """Fill leaf values of a grown tree from the honest sample only."""
    honest_rows = np.asarray(honest_rows, dtype=np.int64)
    y = np.asarray(outcomes)[honest_rows]
    m = tree.m if m is None else m
    z = (y == m) if indicator == INDICATOR_EQUAL else (y <= m)
    return fill_value_rows(tree, covariates, honest_rows, z)


def _grow_and_fill(X, outcomes, train_indices, honest_rows, m, b, indicator,
                   params, subsample_size):
    rng = substream(params.seed, STREAM_TREES, m, b)
    subsample = np.sort(rng.choice(train_indices, size=subsample_size, replace=False))
    tree = grow_tree(X, outcomes, subsample, m, params, rng, indicator=indicator)
    if honest_rows is None:
        y = np.asarray(outcomes)[subsample]
        z = (y == m) if indicator == INDICATOR_EQUAL else (y <= m)
        return fill_value_rows(tree, X, subsample, z)
    return fill_honest_leaves(tree, X, honest_rows, outcomes, m=m,
                              indicator=indicator)


def fit_forests(dataset, params, surfaces, indicator, n_jobs=1,
                stratify_honest=False):
    """Shared fitting engine: grow and fill one forest per surface label.

    Returns (forests, honest_split). With honest_fraction = 0 the split is
    None and each tree's leaf values come from its own subsample.
    """
    params.validate(dataset.n_covariates)
    dataset.require_all_classes()
    X = dataset.covariates
    y = dataset.outcome
    if params.honest_fraction > 0:
        split = split_honest(dataset, params.honest_fraction, params.seed,
                             stratify=stratify_honest)
        train_indices = split.train_indices
        honest_rows = split.honest_indices
    else:
        split = None
        train_indices = np.arange(dataset.n_rows, dtype=np.int64)
        honest_rows = None
    subsample_size = round_half_up(params.subsample_fraction * train_indices.size)
    subsample_size = min(max(subsample_size, 1), train_indices.size)
    if subsample_size < 2 * params.min_leaf:
        raise FitError(
            f"subsample size {subsample_size} is below 2*min_leaf="
            f"{2 * params.min_leaf}; increase the sample or subsample_fraction "
            "or decrease min_leaf"
        )
    jobs = [(m, b) for m in surfaces for b in range(params.n_trees)]
    if n_jobs is not None and n_jobs != 1:
        built = Parallel(n_jobs=n_jobs)(
            delayed(_grow_and_fill)(
                X, y, train_indices, honest_rows, m, b, indicator, params,
                subsample_size,
            )
            for (m, b) in jobs
        )
    else:
        built = [
            _grow_and_fill(X, y, train_indices, honest_rows, m, b, indicator,
                           params, subsample_size)
            for (m, b) in jobs
        ]
    forests = []
    for si, m in enumerate(surfaces):
        trees = built[si * params.n_trees:(si + 1) * params.n_trees]
        forests.append(ClassForest(m=m, indicator=indicator, trees=trees))
    return forests, split


def fit(dataset, params=None, n_jobs=1, stratify_honest=False):
    """Fit an ordered correlation forest: one class-m forest per class."""
    params = params or ForestParams()
    surfaces = list(range(1, dataset.n_classes + 1))
    forests, split = fit_forests(
        dataset, params, surfaces, INDICATOR_EQUAL, n_jobs=n_jobs,
        stratify_honest=stratify_honest,
    )
    honest_outcomes = (
        dataset.outcome[split.honest_indices] if split is not None else None
    )
    return OcfModel(
        n_classes=dataset.n_classes,
        forests=forests,
        params=params,
        honest_split=split,
        honest_outcomes=honest_outcomes,
        column_meta=dataset.column_meta,
        column_names=dataset.column_names,
        eval_mean=evaluation_points(dataset, "mean"),
        eval_median=evaluation_points(dataset, "median"),
        stratify_honest=stratify_honest,
    )


def tree_predict(tree, w):
    """Class-share of the (filled) leaf containing the query point."""
    if not tree.filled:
        raise FitError("tree leaves have not been filled")
    w = np.ascontiguousarray(np.asarray(w, dtype=np.float64).reshape(1, -1))
    leaf = _kernels.route_rows_kernel(
        tree.feature, tree.threshold, tree.left, tree.right,
        w, np.zeros(1, dtype=np.int64),
    )[0]
    return float(tree.leaf_value[leaf])


def normalize_rows(raw):
    """Scale each row onto the probability simplex; all-zero rows go uniform."""
    raw = np.asarray(raw, dtype=np.float64)
    sums = raw.sum(axis=1, keepdims=True)
    M = raw.shape[1]
    out = np.where(sums > 0, raw / np.where(sums > 0, sums, 1.0), 1.0 / M)
    return out


def predict(model, w, normalize=None):
    """Forest probability predictions at one point or a matrix of points."""
    W = np.asarray(w, dtype=np.float64)
    single = W.ndim == 1
    raw = model.raw_predictions(W)
    if normalize is None:
        normalize = model.params.normalize
    out = normalize_rows(raw) if normalize else raw
    return out[0] if single else out


def compute_weights(model, m, w):
    """Honest forest weights at one query point for the class-m forest."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("compute_weights expects a single query point")
    alphas = model.class_weights(m, w)[0]
    return WeightVector(point=w, m=m, weights=alphas)


def _training_node_counts(tree, covariates):
    """Training-subsample occupancy of every node, recomputed by routing."""
    leaf_of = _kernels.route_rows_kernel(
        tree.feature, tree.threshold, tree.left, tree.right,
        np.ascontiguousarray(covariates), tree.grown_on,
    )
    sorted_leaves = np.sort(leaf_of)
    ids = np.arange(tree.n_nodes, dtype=np.int64)
    starts = np.searchsorted(sorted_leaves, ids, side="left")
    ends = np.searchsorted(sorted_leaves, tree.sub_end, side="left")
    return ends - starts


def audit_model(model, covariates):
    """Structural audit of every tree of a fitted model.

    Checks per split the alpha-regularity child-size bound on the training
    partition, per leaf the min_leaf training occupancy, and per tree that the
    subsample was drawn without replacement. Raises AuditError on violation.
    """
    params = model.params
    for forest in model.forests:
        for t_index, tree in enumerate(forest.trees):
            where = f"surface {forest.m} tree {t_index}"
            rows = tree.grown_on
            if np.unique(rows).size != rows.size:
                raise AuditError(f"{where}: subsample drawn with replacement")
            counts = _training_node_counts(tree, covariates)
            for nid in range(tree.n_nodes):
                if tree.feature[nid] >= 0:
                    n_parent = counts[nid]
                    n_left = counts[tree.left[nid]]
                    n_right = counts[tree.right[nid]]
                    if n_left + n_right != n_parent:
                        raise AuditError(
                            f"{where}: node {nid} children do not partition it"
                        )
                    bound = max(math.ceil(params.alpha * n_parent), params.min_leaf)
                    if min(n_left, n_right) < bound:
                        raise AuditError(
                            f"{where}: node {nid} violates the alpha-regularity "
                            f"bound {bound} with children {n_left}/{n_right}"
                        )
                else:
                    if counts[nid] < params.min_leaf:
                        raise AuditError(
                            f"{where}: leaf {nid} holds {counts[nid]} training "
                            f"rows < min_leaf={params.min_leaf}"
                        )
    return True
