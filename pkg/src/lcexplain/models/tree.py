"""Regression trees grown by greedy weighted-variance reduction."""

from __future__ import annotations

import numpy as np

from ..errors import FitError
from ..kernels import apply_tree, best_split
from ..tabular import Dataset, Schema
from .base import Predictor


class TreeModel(Predictor):
    """Binary regression tree stored as flat node arrays.

    ``feature[k] == -1`` marks a leaf. Numeric splits send ``x <= threshold``
    left. Categorical splits have ``threshold`` NaN and send a level left when
    ``cat_left[k, level]`` is 1; levels not seen at a node while growing are
    routed to the child that received more exposure.
    """

    kind = "tree"

    def __init__(self, schema: Schema, feature, threshold, cat_left, left, right, value,
                 max_depth: int, min_leaf_size: int):
        self.schema = schema
        self.feature = np.ascontiguousarray(feature, dtype=np.int64)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.cat_left = np.ascontiguousarray(cat_left, dtype=np.uint8)
        self.left = np.ascontiguousarray(left, dtype=np.int64)
        self.right = np.ascontiguousarray(right, dtype=np.int64)
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.max_depth = int(max_depth)
        self.min_leaf_size = int(min_leaf_size)
        for a in (self.feature, self.threshold, self.cat_left, self.left, self.right, self.value):
            a.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def is_leaf(self, k: int) -> bool:
        return self.feature[k] < 0

    def depth(self) -> int:
        depth = {0: 0}
        for k in range(self.n_nodes):
            if not self.is_leaf(k):
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return max(depth.values())

    def apply(self, X) -> np.ndarray:
        return apply_tree(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold,
                          self.cat_left, self.left, self.right)

    def _predict(self, X):
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_leaf_size": self.min_leaf_size,
            "nodes": [
                {
                    "feature": int(self.feature[k]),
                    "threshold": None if np.isnan(self.threshold[k]) else float(self.threshold[k]),
                    "left_levels": [int(l) for l in np.flatnonzero(self.cat_left[k])],
                    "left": int(self.left[k]),
                    "right": int(self.right[k]),
                    "value": float(self.value[k]),
                }
                for k in range(self.n_nodes)
            ],
        }

    @classmethod
    def from_dict(cls, schema: Schema, d: dict) -> "TreeModel":
        nodes = d["nodes"]
        width = _level_width(schema)
        cat_left = np.zeros((len(nodes), width), dtype=np.uint8)
        for k, nd in enumerate(nodes):
            cat_left[k, nd["left_levels"]] = 1
        return cls(
            schema,
            [nd["feature"] for nd in nodes],
            [np.nan if nd["threshold"] is None else nd["threshold"] for nd in nodes],
            cat_left,
            [nd["left"] for nd in nodes],
            [nd["right"] for nd in nodes],
            [nd["value"] for nd in nodes],
            d["max_depth"],
            d["min_leaf_size"],
        )


def _level_width(schema: Schema) -> int:
    return max([len(f.kind.levels) for f in schema.features if f.is_categorical] + [1])


def _weighted_mean(y, w) -> float:
    return float(np.dot(w, y) / np.sum(w))


def fit_tree(ds: Dataset, max_depth: int = 3, min_leaf_size: int = 1) -> TreeModel:
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    if min_leaf_size < 1:
        raise ValueError("min_leaf_size must be at least 1")
    if ds.n_rows < 2 * min_leaf_size and max_depth > 0:
        raise FitError(f"{ds.n_rows} rows cannot fill two leaves of {min_leaf_size}")

    schema = ds.schema
    width = _level_width(schema)
    X, y, w = ds.X, ds.y, ds.w
    feature, threshold, cat_rows, left, right, value = [], [], [], [], [], []

    def new_node(rows) -> int:
        feature.append(-1)
        threshold.append(np.nan)
        cat_rows.append(np.zeros(width, dtype=np.uint8))
        left.append(-1)
        right.append(-1)
        value.append(_weighted_mean(y[rows], w[rows]))
        return len(feature) - 1

    def grow(k: int, rows: np.ndarray, depth: int) -> None:
        if depth >= max_depth or rows.size < 2 * min_leaf_size:
            return
        best = _best_split(X, y, w, rows, schema, min_leaf_size, width)
        if best is None:
            return
        j, thr, left_mask, go_left = best
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[k] = j
        threshold[k] = thr
        if left_mask is not None:
            cat_rows[k] = left_mask
        lk = new_node(lrows)
        rk = new_node(rrows)
        left[k], right[k] = lk, rk
        grow(lk, lrows, depth + 1)
        grow(rk, rrows, depth + 1)

    root_rows = np.arange(ds.n_rows)
    grow(new_node(root_rows), root_rows, 0)
    return TreeModel(schema, feature, threshold, np.array(cat_rows), left, right, value,
                     max_depth, min_leaf_size)


def _best_split(X, y, w, rows, schema, min_leaf, width):
    best_gain = 0.0
    best = None
    yr, wr = y[rows], w[rows]
    for j, feat in enumerate(schema.features):
        col = X[rows, j]
        if feat.is_categorical:
            n_levels = len(feat.kind.levels)
            codes = col.astype(np.int64)
            lw = np.bincount(codes, weights=wr, minlength=n_levels)
            lwy = np.bincount(codes, weights=wr * yr, minlength=n_levels)
            present = np.flatnonzero(lw > 0)
            if present.size < 2:
                continue
            means = lwy[present] / lw[present]
            ranked = present[np.lexsort((present, means))]
            rank = np.empty(n_levels, dtype=np.float64)
            rank[ranked] = np.arange(ranked.size)
            key = rank[codes]
        else:
            key = col
        order = np.argsort(key, kind="mergesort")
        xs = np.ascontiguousarray(key[order])
        gain, pos = best_split(xs, np.ascontiguousarray(yr[order]), np.ascontiguousarray(wr[order]), min_leaf)
        if pos < 0 or not gain > best_gain:
            continue
        best_gain = gain
        lo, hi = xs[pos - 1], xs[pos]
        if feat.is_categorical:
            left_levels = ranked[: int(hi)]
            mask = np.zeros(width, dtype=np.uint8)
            mask[left_levels] = 1
            absent = np.setdiff1d(np.arange(len(feat.kind.levels)), present)
            if absent.size and lw[left_levels].sum() >= lw.sum() - lw[left_levels].sum():
                mask[absent] = 1
            go_left = mask[codes] == 1
            best = (j, np.nan, mask, go_left)
        else:
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (j, thr, None, col <= thr)
    return best
