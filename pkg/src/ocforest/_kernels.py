"""JIT-compiled kernels for tree growth, routing, prediction and weights.

All score arithmetic works on int64 counts with a single float64 division per
child, `p * (n - p) / n` (the child's class count contribution to the
node-level objective), matching the reference implementation in `splitting`
bit for bit so that tie-breaking is identical in both paths.
"""

import numpy as np
from numba import njit


def max_tree_nodes(n_subsample, min_leaf):
    """Upper bound on node count: every leaf holds at least min_leaf rows."""
    return 2 * max(1, n_subsample // max(1, min_leaf)) + 3


@njit(cache=True)
def grow_tree_kernel(X, z, rows, feats, alpha, min_leaf):
    """Grow one tree on the subsample `rows` with indicator `z`.

    `feats` holds one pre-drawn, ascending mtry-subset of feature indices per
    potential split attempt, consumed in depth-first preorder. Children are
    required to keep max(ceil(alpha * n_node), min_leaf) rows each; a node
    with no feasible candidate becomes a leaf. Returns preorder node arrays
    (subtrees occupy contiguous id ranges, sub_end is exclusive).
    """
    n_sub = rows.shape[0]
    mtry = feats.shape[1]
    max_nodes = 2 * max(1, n_sub // max(1, min_leaf)) + 3
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    parent = np.full(max_nodes, -1, np.int64)
    seg = rows.copy()
    stack_lo = np.empty(max_nodes + 1, np.int64)
    stack_hi = np.empty(max_nodes + 1, np.int64)
    stack_par = np.empty(max_nodes + 1, np.int64)
    stack_isl = np.empty(max_nodes + 1, np.int64)
    vals = np.empty(n_sub, np.float64)
    tmp = np.empty(n_sub, np.int64)
    sp = 0
    stack_lo[sp] = 0
    stack_hi[sp] = n_sub
    stack_par[sp] = -1
    stack_isl[sp] = 0
    sp += 1
    n_nodes = 0
    attempt = 0
    while sp > 0:
        sp -= 1
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        par = stack_par[sp]
        isl = stack_isl[sp]
        nid = n_nodes
        n_nodes += 1
        parent[nid] = par
        if par >= 0:
            if isl == 1:
                left[par] = nid
            else:
                right[par] = nid
        n = hi - lo
        limit = int(np.ceil(alpha * n))
        if limit < min_leaf:
            limit = min_leaf
        if n < 2 * limit:
            continue
        if attempt >= feats.shape[0]:
            continue
        best_score = np.inf
        best_j = -1
        best_t = 0.0
        for fi in range(mtry):
            j = feats[attempt, fi]
            for i in range(n):
                vals[i] = X[seg[lo + i], j]
            order = np.argsort(vals[:n])
            ctot = 0
            for i in range(n):
                ctot += z[seg[lo + order[i]]]
            c = 0
            for pos in range(n - 1):
                c += z[seg[lo + order[pos]]]
                vcur = vals[order[pos]]
                vnext = vals[order[pos + 1]]
                if vcur < vnext:
                    nl = pos + 1
                    nr = n - nl
                    if nl >= limit and nr >= limit:
                        pl = c
                        pr = ctot - c
                        s = (pl * (nl - pl)) / nl + (pr * (nr - pr)) / nr
                        if s < best_score:
                            best_score = s
                            best_j = j
                            t = 0.5 * (vcur + vnext)
                            if t >= vnext:
                                t = vcur
                            best_t = t
        attempt += 1
        if best_j < 0:
            continue
        nl_count = 0
        for i in range(lo, hi):
            if X[seg[i], best_j] <= best_t:
                tmp[nl_count] = seg[i]
                nl_count += 1
        nr_count = nl_count
        for i in range(lo, hi):
            if X[seg[i], best_j] > best_t:
                tmp[nr_count] = seg[i]
                nr_count += 1
        for i in range(n):
            seg[lo + i] = tmp[i]
        feature[nid] = best_j
        threshold[nid] = best_t
        mid = lo + nl_count
        stack_lo[sp] = mid
        stack_hi[sp] = hi
        stack_par[sp] = nid
        stack_isl[sp] = 0
        sp += 1
        stack_lo[sp] = lo
        stack_hi[sp] = mid
        stack_par[sp] = nid
        stack_isl[sp] = 1
        sp += 1
    sub_end = np.empty(n_nodes, np.int64)
    for i in range(n_nodes - 1, -1, -1):
        if feature[i] < 0:
            sub_end[i] = i + 1
        else:
            sub_end[i] = sub_end[right[i]]
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        parent[:n_nodes].copy(),
        sub_end,
    )


@njit(cache=True)
def route_rows_kernel(feature, threshold, left, right, X, rows):
    """Leaf node id reached by each of the given data rows."""
    out = np.empty(rows.shape[0], np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        nid = 0
        while feature[nid] >= 0:
            if X[r, feature[nid]] <= threshold[nid]:
                nid = left[nid]
            else:
                nid = right[nid]
        out[i] = nid
    return out


@njit(cache=True)
def forest_predict_kernel(feature, threshold, left, right, leaf_value, roots, Xq):
    """Sum of per-tree leaf values at each query point (caller divides by B).

    Walks four queries in lockstep so their independent node loads overlap;
    the routing itself is branch-serial and memory-latency bound.
    """
    Q = Xq.shape[0]
    acc = np.zeros(Q, np.float64)
    G = 4
    nids = np.empty(G, np.int64)
    for b in range(roots.shape[0]):
        root = roots[b]
        q0 = 0
        while q0 < Q:
            gq = min(G, Q - q0)
            for g in range(gq):
                nids[g] = root
            active = 1
            while active > 0:
                active = 0
                for g in range(gq):
                    nid = nids[g]
                    fj = feature[nid]
                    if fj >= 0:
                        if Xq[q0 + g, fj] <= threshold[nid]:
                            nids[g] = left[nid]
                        else:
                            nids[g] = right[nid]
                        active += 1
            for g in range(gq):
                acc[q0 + g] += leaf_value[nids[g]]
            q0 += G
    return acc


@njit(cache=True)
def forest_weights_kernel(feature, threshold, left, right, slice_start, slice_end,
                          grouped_rows, roots, Xq, n_out):
    """Summed leaf co-membership weights over trees (caller divides by B).

    out[q, i] accumulates 1/|leaf| for every tree whose leaf at query q holds
    value-sample position i.
    """
    Q = Xq.shape[0]
    out = np.zeros((Q, n_out), np.float64)
    for b in range(roots.shape[0]):
        root = roots[b]
        for q in range(Q):
            nid = root
            while feature[nid] >= 0:
                if Xq[q, feature[nid]] <= threshold[nid]:
                    nid = left[nid]
                else:
                    nid = right[nid]
            s = slice_start[nid]
            e = slice_end[nid]
            inv = 1.0 / (e - s)
            for t in range(s, e):
                out[q, grouped_rows[t]] += inv
    return out
