"""Independent reference implementations used as test oracles."""

import math

import numpy as np

from ocforest.forest import Tree, _draw_features
from ocforest import _kernels


def brute_force_best_split(rows, outcomes, covariates, candidate_features, m,
                           alpha, min_leaf):
    """Exhaustive (feature, midpoint) enumeration with explicit counting.

    Independent of the production search: candidates are enumerated from
    scratch and child counts are obtained by scanning rows per candidate. The
    score is the same canonical integer-count expression, so ties resolve
    identically: lowest score, then lowest feature index, then lowest
    threshold.
    """
    rows = list(rows)
    n = len(rows)
    limit = max(math.ceil(alpha * n), min_leaf)
    if n < 2 * limit:
        return None
    best = None
    for j in sorted(set(int(f) for f in candidate_features)):
        values = sorted(set(float(covariates[r, j]) for r in rows))
        for lo, hi in zip(values[:-1], values[1:]):
            t = 0.5 * (lo + hi)
            if t >= hi:
                t = lo
            left = [r for r in rows if covariates[r, j] <= t]
            right = [r for r in rows if covariates[r, j] > t]
            nl, nr = len(left), len(right)
            if nl < limit or nr < limit:
                continue
            pl = sum(1 for r in left if outcomes[r] == m)
            pr = sum(1 for r in right if outcomes[r] == m)
            score = (pl * (nl - pl)) / nl + (pr * (nr - pr)) / nr
            if best is None or score < best[0]:
                best = (score, j, t, frozenset(left))
    if best is None:
        return None
    score, j, t, left = best
    return {"feature": j, "threshold": t, "score": score / n, "left": left}


def reference_grow_tree(covariates, outcomes, subsample_rows, m, params, rng):
    """Recursive grower built on the public best_split, for kernel checks.

    Consumes the same pre-drawn feature subsets in depth-first preorder as the
    production kernel, so resulting trees must be identical.
    """
    from ocforest.splitting import best_split

    rows = np.asarray(subsample_rows, dtype=np.int64)
    k = covariates.shape[1]
    mtry = params.resolved_mtry(k)
    cap = _kernels.max_tree_nodes(rows.size, params.min_leaf)
    feats = _draw_features(rng, cap, k, mtry)
    feature, threshold, left, right, parent = [], [], [], [], []
    state = {"attempt": 0}

    def build(node_rows, par):
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        parent.append(par)
        n = node_rows.size
        limit = max(math.ceil(params.alpha * n), params.min_leaf)
        if n < 2 * limit:
            return nid
        cand = best_split(node_rows, outcomes, covariates,
                          feats[state["attempt"]], m, params.alpha,
                          params.min_leaf)
        state["attempt"] += 1
        if cand is None:
            return nid
        feature[nid] = cand.feature
        threshold[nid] = cand.threshold
        left[nid] = build(cand.left_rows, nid)
        right[nid] = build(cand.right_rows, nid)
        return nid

    build(rows, -1)
    n_nodes = len(feature)
    feature = np.asarray(feature, dtype=np.int64)
    right_arr = np.asarray(right, dtype=np.int64)
    sub_end = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes - 1, -1, -1):
        sub_end[i] = i + 1 if feature[i] < 0 else sub_end[right_arr[i]]
    return Tree(
        m=m,
        feature=feature,
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=right_arr,
        parent=np.asarray(parent, dtype=np.int64),
        sub_end=sub_end,
        grown_on=rows,
    )


def random_node(rng, size_lo=2, size_hi=200, n_classes=3):
    n = int(rng.integers(size_lo, size_hi + 1))
    return rng.integers(1, n_classes + 1, size=n)
