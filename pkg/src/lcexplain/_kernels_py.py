"""Pure-Python reference versions of the compiled kernels.

Each function here must return exactly what its twin in ``_kernels.pyx``
returns, including the arithmetic order of running sums, so that results do
not depend on whether the extension was built.
"""

import numpy as np


def best_split(x, y, w, min_leaf):
    """Best weighted-variance split of rows already sorted by ``x``.

    Returns ``(gain, n_left)`` where ``n_left`` rows go left and ``gain`` is the
    reduction in weighted sum of squared errors; ``(0.0, -1)`` when no
    admissible split exists. Splits only fall between distinct ``x`` values.
    """
    n = len(x)
    sw = 0.0
    swy = 0.0
    for i in range(n):
        sw += w[i]
        swy += w[i] * y[i]
    parent = swy * swy / sw

    best_gain = 0.0
    best_pos = -1
    lw = 0.0
    lwy = 0.0
    for i in range(n - 1):
        lw += w[i]
        lwy += w[i] * y[i]
        if i + 1 < min_leaf or n - i - 1 < min_leaf:
            continue
        if x[i] == x[i + 1]:
            continue
        rw = sw - lw
        rwy = swy - lwy
        gain = lwy * lwy / lw + rwy * rwy / rw - parent
        if gain > best_gain:
            best_gain = gain
            best_pos = i + 1
    return best_gain, best_pos


def apply_tree(X, feature, threshold, cat_left, left, right):
    """Leaf index reached by every row of ``X``.

    ``feature[k] < 0`` marks a leaf. Numeric nodes send ``x <= threshold`` left;
    categorical nodes (``threshold`` is NaN) send level ``l`` left when
    ``cat_left[k, l]`` is set.
    """
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        k = node[active]
        f = feature[k]
        v = X[active, f]
        thr = threshold[k]
        numeric = ~np.isnan(thr)
        go_left = np.empty(active.size, dtype=bool)
        go_left[numeric] = v[numeric] <= thr[numeric]
        cat = ~numeric
        go_left[cat] = cat_left[k[cat], v[cat].astype(np.int64)] != 0
        node[active] = np.where(go_left, left[k], right[k])
        active = active[feature[node[active]] >= 0]
    return node
