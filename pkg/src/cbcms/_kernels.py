"""Compiled kernels for tree construction and forest traversal.

The algorithms (bootstrap, greedy Gini split search over a random feature
subset, vector leaves, mean-vote aggregation) are implemented here from
first principles; numba only compiles the loops.  Each tree is built from
its own seed, so a forest is reproducible tree by tree no matter how the
trees are scheduled across workers.

Split search: features are visited in a seeded random permutation;
candidate thresholds are midpoints between consecutive distinct sorted
values; the score is the size-weighted sum over children of the mean
per-label binary Gini impurity (computed from integer positive counts).
At least `max_features` features are examined, and the search keeps going
past that count until some feature yields a valid split (so a node only
becomes a leaf when no feature can split it).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def build_tree(
    X,  # float64 (n_total, d)
    Y,  # uint8   (n_total, n_labels)
    seed,  # int64 per-tree seed
    bootstrap,  # bool
    max_depth,  # int64
    min_samples_split,  # int64
    min_samples_leaf,  # int64
    max_features,  # int64
    feature_arr,  # int32 (cap,)  out: split feature, -1 for leaves
    thresh_arr,  # float64 (cap,) out
    left_arr,  # int32 (cap,) out
    right_arr,  # int32 (cap,) out
    leaf_idx_arr,  # int32 (cap,) out: leaf row in leaf_values, -1 for internal
    leaf_values,  # float64 (cap_leaves, n_labels) out: per-label positive fractions
    leaf_counts,  # int64 (cap_leaves,) out: in-bag rows per leaf
):
    np.random.seed(seed)
    n_total = X.shape[0]
    d = X.shape[1]
    n_labels = Y.shape[1]

    rows = np.empty(n_total, np.int64)
    if bootstrap:
        for i in range(n_total):
            rows[i] = np.random.randint(0, n_total)
    else:
        for i in range(n_total):
            rows[i] = i

    cap = feature_arr.shape[0]
    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)

    node_count = 1
    leaf_count = 0
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n_total
    stack_depth[0] = 0

    total = np.empty(n_labels, np.int64)
    left_counts = np.empty(n_labels, np.int64)
    perm = np.empty(d, np.int64)
    vals = np.empty(n_total, np.float64)

    while top >= 0:
        node_id = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        top -= 1
        n_node = end - start

        for l in range(n_labels):
            total[l] = 0
        for k in range(start, end):
            r = rows[k]
            for l in range(n_labels):
                total[l] += Y[r, l]

        pure = True
        for l in range(n_labels):
            if total[l] != 0 and total[l] != n_node:
                pure = False
                break

        best_feature = -1
        best_thr = 0.0
        if not (pure or depth >= max_depth or n_node < min_samples_split):
            for i in range(d):
                perm[i] = i
            for i in range(d - 1, 0, -1):
                j = np.random.randint(0, i + 1)
                tmp = perm[i]
                perm[i] = perm[j]
                perm[j] = tmp

            best_crit = np.inf
            examined = 0
            for fi in range(d):
                if best_feature >= 0 and examined >= max_features:
                    break
                f = perm[fi]
                examined += 1
                for k in range(n_node):
                    vals[k] = X[rows[start + k], f]
                order = np.argsort(vals[:n_node])
                for l in range(n_labels):
                    left_counts[l] = 0
                for k in range(n_node - 1):
                    r = rows[start + order[k]]
                    for l in range(n_labels):
                        left_counts[l] += Y[r, l]
                    v_here = vals[order[k]]
                    v_next = vals[order[k + 1]]
                    if v_here == v_next:
                        continue
                    left_n = k + 1
                    right_n = n_node - left_n
                    if left_n < min_samples_leaf or right_n < min_samples_leaf:
                        continue
                    s_left = 0.0
                    s_right = 0.0
                    for l in range(n_labels):
                        cl = left_counts[l]
                        cr = total[l] - cl
                        s_left += cl * (left_n - cl)
                        s_right += cr * (right_n - cr)
                    crit = s_left / left_n + s_right / right_n
                    if crit < best_crit:
                        best_crit = crit
                        best_feature = f
                        best_thr = (v_here + v_next) / 2.0

        if best_feature < 0:
            leaf_id = leaf_count
            leaf_count += 1
            feature_arr[node_id] = -1
            leaf_idx_arr[node_id] = leaf_id
            leaf_counts[leaf_id] = n_node
            for l in range(n_labels):
                leaf_values[leaf_id, l] = total[l] / n_node
            continue

        i = start
        j = end - 1
        while i <= j:
            if X[rows[i], best_feature] <= best_thr:
                i += 1
            else:
                tmp = rows[i]
                rows[i] = rows[j]
                rows[j] = tmp
                j -= 1
        mid = i

        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        feature_arr[node_id] = best_feature
        thresh_arr[node_id] = best_thr
        left_arr[node_id] = left_id
        right_arr[node_id] = right_id
        leaf_idx_arr[node_id] = -1

        top += 1
        stack_node[top] = right_id
        stack_start[top] = mid
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = left_id
        stack_start[top] = start
        stack_end[top] = mid
        stack_depth[top] = depth + 1

    return node_count, leaf_count


@njit(cache=True)
def forest_scores(
    X,  # float64 (n, d)
    features,  # int32 (total_nodes,) concatenated, -1 at leaves
    thresholds,  # float64 (total_nodes,)
    lefts,  # int32 (total_nodes,) global child ids
    rights,  # int32 (total_nodes,)
    leaf_ids,  # int32 (total_nodes,) global leaf rows, -1 at internal nodes
    leaf_values,  # float64 (total_leaves, n_labels)
    roots,  # int64 (n_trees,)
    out,  # float64 (n, n_labels) preallocated zeros
):
    n = X.shape[0]
    n_trees = roots.shape[0]
    n_labels = leaf_values.shape[1]
    for i in range(n):
        for t in range(n_trees):
            node = roots[t]
            while leaf_ids[node] < 0:
                if X[i, features[node]] <= thresholds[node]:
                    node = lefts[node]
                else:
                    node = rights[node]
            leaf = leaf_ids[node]
            for l in range(n_labels):
                out[i, l] += leaf_values[leaf, l]
    inv = 1.0 / n_trees
    for i in range(n):
        for l in range(n_labels):
            out[i, l] *= inv
