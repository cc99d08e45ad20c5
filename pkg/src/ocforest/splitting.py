"""Node statistics and the correlation-aware split search.

For the class-m surface a node tracks the cumulative counts of outcomes at or
below m and at or below m-1. Splits minimize, over both children, the sum of
the two cumulative-indicator mean squared errors minus twice their error
correlation. Because the two indicators are nested, the per-child objective
collapses algebraically to the binary variance of the class-m share,
p*(n-p)/n^2 from the integer counts; the identity is exact and makes
tie-breaking well defined.

Candidate splits aggregate the children by size (each child's mean scaled by
its occupancy), i.e. the squared-error objective is summed over the parent's
observations. The unweighted child-mean sum is the same quantity only for
balanced children; the weighted aggregate is what reproduces the published
estimator's behavior, so it is the one minimized here.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NodeStats:
    """Sufficient statistics of one node for one class surface m."""

    n_node: int
    count_le_m: int
    count_le_m1: int

    def __post_init__(self):
        if self.n_node < 1:
            raise ValueError("node must hold at least one observation")
        if not 0 <= self.count_le_m1 <= self.count_le_m <= self.n_node:
            raise ValueError(
                f"invalid cumulative counts {self.count_le_m1}, {self.count_le_m} "
                f"for node size {self.n_node}"
            )

    @classmethod
    def from_outcomes(cls, outcomes, m):
        y = np.asarray(outcomes)
        return cls(
            n_node=y.size,
            count_le_m=int(np.count_nonzero(y <= m)),
            count_le_m1=int(np.count_nonzero(y <= m - 1)),
        )


@dataclass(frozen=True)
class SplitCandidate:
    """An axis-aligned split: rows with covariate[j] <= threshold go left.

    `score` is the minimized objective per parent observation, i.e. the
    size-weighted average of the two children's scores.
    """

    feature: int
    threshold: float
    score: float
    left_rows: np.ndarray
    right_rows: np.ndarray


def node_mu(stats, which="m"):
    """Share of node outcomes at or below the requested cumulative class."""
    c = stats.count_le_m if which == "m" else stats.count_le_m1
    return c / stats.n_node


def node_mse(stats, which="m"):
    """Mean squared error of the cumulative indicator around its node mean.

    For a binary indicator the mean of squared deviations equals mu*(1-mu);
    computed here as c*(n-c)/n^2 from the integer counts.
    """
    c = stats.count_le_m if which == "m" else stats.count_le_m1
    n = stats.n_node
    return (c * (n - c)) / (n * n)


def node_ec(stats):
    """Error correlation of the two cumulative indicators in the node.

    The below-m-1 indicator implies the below-m indicator, so the raw product
    term equals mu_{m-1} and the value reduces to mu_{m-1} * (1 - mu_m),
    computed as c1*(n-cm)/n^2.
    """
    n = stats.n_node
    return (stats.count_le_m1 * (n - stats.count_le_m)) / (n * n)


def child_score(stats):
    """Split objective contribution of one child: MSE_m + MSE_{m-1} - 2 EC.

    With p = count_le_m - count_le_m1 (the class-m count) the decomposition
    collapses exactly to p*(n-p)/n^2, the binary variance of the class-m
    share. This single canonical expression is used for every score
    comparison so that ties are reproducible.
    """
    p = stats.count_le_m - stats.count_le_m1
    n = stats.n_node
    return (p * (n - p)) / (n * n)


def size_limit(n_node, alpha, min_leaf):
    """Minimum child size: each side keeps a fraction alpha of the parent and
    at least min_leaf observations."""
    return max(math.ceil(alpha * n_node), min_leaf)


def candidate_thresholds(values):
    """Midpoints between consecutive distinct sorted values.

    Guards against the midpoint rounding up onto the right neighbour for
    adjacent floats, in which case the left value itself is used.
    """
    vs = np.sort(np.unique(values))
    mids = 0.5 * (vs[:-1] + vs[1:])
    bad = mids >= vs[1:]
    mids[bad] = vs[:-1][bad]
    return mids


def _indicator_split_scores(values, z, limit):
    """Scores of all valid boundary positions for one feature.

    Returns (positions, scores, thresholds, order) where positions index the
    sorted arrangement: position i splits after sorted element i.
    """
    n = values.size
    order = np.argsort(values, kind="mergesort")
    vs = values[order]
    zs = z[order].astype(np.int64)
    cum = np.cumsum(zs)
    total = int(cum[-1])
    n_left = np.arange(1, n, dtype=np.int64)
    n_right = n - n_left
    boundary = vs[:-1] < vs[1:]
    valid = boundary & (n_left >= limit) & (n_right >= limit)
    pos = np.flatnonzero(valid)
    if pos.size == 0:
        return pos, None, None, order
    pl = cum[pos]
    nl = n_left[pos]
    pr = total - pl
    nr = n_right[pos]
    scores = (pl * (nl - pl)) / nl + (pr * (nr - pr)) / nr
    thresholds = 0.5 * (vs[pos] + vs[pos + 1])
    bad = thresholds >= vs[pos + 1]
    thresholds[bad] = vs[pos][bad]
    return pos, scores, thresholds, order


def best_split(rows, outcomes, covariates, candidate_features, m, alpha, min_leaf):
    """Exhaustive axis-aligned split search for the class-m surface.

    Considers every candidate feature and every midpoint between consecutive
    distinct observed values in the node, keeps only candidates leaving at
    least max(ceil(alpha * n_node), min_leaf) observations on each side, and
    returns the candidate minimizing the size-weighted sum of child scores
    (|left| * child_score(left) + |right| * child_score(right), scaled by the
    node size). Ties break on the lowest covariate index, then the lowest
    threshold. Returns None when no candidate satisfies the size restriction.
    """
    rows = np.asarray(rows, dtype=np.int64)
    n = rows.size
    features = np.unique(np.asarray(candidate_features, dtype=np.int64))
    if features.size == 0:
        raise ValueError("candidate_features must be non-empty")
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    limit = size_limit(n, alpha, min_leaf)
    if n < 2 * limit:
        return None
    z = (np.asarray(outcomes)[rows] == m)
    best = None
    for j in features:
        values = covariates[rows, j]
        pos, scores, thresholds, _ = _indicator_split_scores(values, z, limit)
        if pos.size == 0:
            continue
        k = int(np.argmin(scores))  # first minimum: lowest threshold wins ties
        if best is None or scores[k] < best[0]:
            best = (float(scores[k]), int(j), float(thresholds[k]))
    if best is None:
        return None
    score, j, t = best
    left_mask = covariates[rows, j] <= t
    return SplitCandidate(
        feature=j,
        threshold=t,
        score=score / n,
        left_rows=rows[left_mask],
        right_rows=rows[~left_mask],
    )
