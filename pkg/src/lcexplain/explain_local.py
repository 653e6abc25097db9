"""Instance-level attributions: ordered break-down and Shapley values.

Conditional expectations are estimated by substitution: to condition on a
set of features taking the instance's values, those columns of every
background row are overwritten with the instance's values and the model's
predictions are averaged. Because the fully substituted background is the
instance repeated, the contributions telescope to exactly
``prediction - intercept``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._numeric import stable_mean
from .errors import DataError, SchemaError
from .models.base import Predictor
from .seeding import derive_seed, make_rng
from .tabular import Dataset, validate_features

DEFAULT_BACKGROUND_ROWS = 1000
EXACT_MAX_FEATURES = 8


class BackgroundSet:
    """Reference rows for the conditional expectations.

    Datasets with more than ``max_rows`` rows are subsampled without
    replacement using ``seed``; pass ``max_rows=None`` to keep every row.
    """

    def __init__(self, ds: Dataset, max_rows: int | None = DEFAULT_BACKGROUND_ROWS, seed: int = 0):
        if max_rows is not None and max_rows < 1:
            raise ValueError("max_rows must be positive")
        self.schema = ds.schema
        if max_rows is not None and ds.n_rows > max_rows:
            rng = make_rng(derive_seed(seed, "background"))
            rows = np.sort(rng.choice(ds.n_rows, size=max_rows, replace=False))
        else:
            rows = np.arange(ds.n_rows)
        self.rows = rows
        self.X = ds.X[rows]

    def __len__(self) -> int:
        return self.X.shape[0]


@dataclass
class AttributionSet:
    instance: list[float]
    intercept: float
    contributions: list[tuple[str, float]]
    ordering: list[str] | str  # feature order, or "exact" / "sampled" for Shapley
    prediction: float
    method: str = "breakdown"  # "breakdown" | "shapley_exact" | "shapley_sampled"
    n_samples: int | None = None
    # both aligned with ``contributions``; ``instance`` is in schema order
    std_errors: list[float] | None = None
    instance_labels: list[str] | None = None

    artifact_type = "attribution"

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.contributions]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.contributions])

    def __getitem__(self, name: str) -> float:
        for n, v in self.contributions:
            if n == name:
                return v
        raise KeyError(name)

    def additivity_gap(self) -> float:
        """``intercept + sum(contributions) - prediction``."""
        return self.intercept + math.fsum(v for _, v in self.contributions) - self.prediction

    def cumulative(self) -> list[float]:
        """Running totals starting from the intercept, one per contribution."""
        out, total = [], self.intercept
        for _, v in self.contributions:
            total += v
            out.append(total)
        return out

    def to_dict(self) -> dict:
        return {
            "type": self.artifact_type,
            "method": self.method,
            "instance": list(self.instance),
            "instance_labels": self.instance_labels,
            "intercept": self.intercept,
            "contributions": [{"feature": n, "value": v} for n, v in self.contributions],
            "ordering": self.ordering,
            "prediction": self.prediction,
            "n_samples": self.n_samples,
            "std_errors": self.std_errors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributionSet":
        return cls(
            instance=list(d["instance"]),
            intercept=d["intercept"],
            contributions=[(c["feature"], c["value"]) for c in d["contributions"]],
            ordering=d["ordering"],
            prediction=d["prediction"],
            method=d["method"],
            n_samples=d.get("n_samples"),
            std_errors=d.get("std_errors"),
            instance_labels=d.get("instance_labels"),
        )


class _Expectations:
    """Cached substitution estimates keyed by the bitmask of conditioned features."""

    def __init__(self, m: Predictor, bg: BackgroundSet, x: np.ndarray):
        self.m, self.bg, self.x = m, bg, x
        self.cache: dict[int, float] = {}

    def __call__(self, mask: int) -> float:
        if mask not in self.cache:
            X = np.array(self.bg.X, copy=True)
            cols = [j for j in range(self.x.size) if mask >> j & 1]
            if cols:
                X[:, cols] = self.x[cols]
            self.cache[mask] = stable_mean(self.m.predict(X))
        return self.cache[mask]

    def contributions(self, order) -> np.ndarray:
        out = np.empty(len(order))
        mask = 0
        prev = self(0)
        for j in order:
            mask |= 1 << j
            cur = self(mask)
            out[j] = cur - prev
            prev = cur
        return out


def _prepare(m: Predictor, bg: BackgroundSet, x) -> np.ndarray:
    if bg.schema != m.schema:
        raise SchemaError("background schema does not match the model's schema")
    if len(bg) < 1:
        raise DataError("background set is empty")
    x = getattr(x, "X", x)
    return validate_features(m.schema, x).reshape(-1, m.schema.n_features)[0].copy()


def _labels(m: Predictor, x: np.ndarray) -> list[str]:
    out = []
    for v, feat in zip(x, m.schema.features):
        out.append(feat.kind.levels[int(v)] if feat.is_categorical else repr(float(v)))
    return out


def _ordering_indices(m: Predictor, ordering) -> list[int]:
    p = m.schema.n_features
    if ordering is None:
        return list(range(p))
    idx = [m.schema.index(o) for o in ordering]
    if sorted(idx) != list(range(p)):
        raise DataError("ordering must be a permutation of all features")
    return idx


def break_down(m: Predictor, bg: BackgroundSet, x, ordering=None) -> AttributionSet:
    """Sequential contributions for one instance, in the given feature order
    (schema order by default)."""
    x = _prepare(m, bg, x)
    order = _ordering_indices(m, ordering)
    E = _Expectations(m, bg, x)
    contrib = E.contributions(order)
    names = m.schema.names
    labels = _labels(m, x)
    return AttributionSet(
        instance=[float(v) for v in x],
        intercept=E(0),
        contributions=[(names[j], float(contrib[j])) for j in order],
        ordering=[names[j] for j in order],
        prediction=float(m.predict(x[None, :])[0]),
        method="breakdown",
        instance_labels=[labels[j] for j in order],
    )


def greedy_ordering(m: Predictor, bg: BackgroundSet, x) -> list[str]:
    """Order that adds, at each step, the feature whose substitution moves the
    expected prediction the most."""
    x = _prepare(m, bg, x)
    E = _Expectations(m, bg, x)
    p = x.size
    mask, order = 0, []
    for _ in range(p):
        base = E(mask)
        remaining = [j for j in range(p) if not mask >> j & 1]
        j = max(remaining, key=lambda j: abs(E(mask | 1 << j) - base))
        order.append(j)
        mask |= 1 << j
    return [m.schema.names[j] for j in order]


def shapley_exact(m: Predictor, bg: BackgroundSet, x, max_features: int = EXACT_MAX_FEATURES) -> AttributionSet:
    """Break-down contributions averaged over every feature ordering."""
    x = _prepare(m, bg, x)
    p = x.size
    if p > max_features:
        raise DataError(f"exact Shapley enumerates {p}! orderings; limit is {max_features} features")
    E = _Expectations(m, bg, x)
    per_feature: list[list[float]] = [[] for _ in range(p)]
    for order in itertools.permutations(range(p)):
        c = E.contributions(order)
        for j in range(p):
            per_feature[j].append(c[j])
    n_orders = math.factorial(p)
    # stable_mean sums with fsum, which is exactly rounded: features with the same
    # multiset of contributions get bit-identical values whatever the order
    phi = [stable_mean(v) for v in per_feature]
    names = m.schema.names
    return AttributionSet(
        instance=[float(v) for v in x],
        intercept=E(0),
        contributions=[(names[j], float(phi[j])) for j in range(p)],
        ordering="exact",
        prediction=float(m.predict(x[None, :])[0]),
        method="shapley_exact",
        n_samples=n_orders,
        instance_labels=_labels(m, x),
    )


def sample_orderings(p: int, M: int, seed: int) -> list[tuple[int, ...]]:
    rng = make_rng(derive_seed(seed, "shapley-orderings"))
    return [tuple(int(j) for j in rng.permutation(p)) for _ in range(M)]


def shapley_sampled(m: Predictor, bg: BackgroundSet, x, M: int = 1000, seed: int = 0) -> AttributionSet:
    """Monte-Carlo Shapley values from ``M`` uniformly sampled orderings,
    with per-feature standard errors."""
    if M < 1:
        raise ValueError("M must be at least 1")
    x = _prepare(m, bg, x)
    p = x.size
    E = _Expectations(m, bg, x)
    samples = np.array([E.contributions(order) for order in sample_orderings(p, M, seed)])
    phi = [stable_mean(samples[:, j]) for j in range(p)]
    if M > 1:
        se = [float(np.std(samples[:, j], ddof=1) / math.sqrt(M)) for j in range(p)]
    else:
        se = [0.0] * p
    names = m.schema.names
    return AttributionSet(
        instance=[float(v) for v in x],
        intercept=E(0),
        contributions=[(names[j], float(phi[j])) for j in range(p)],
        ordering="sampled",
        prediction=float(m.predict(x[None, :])[0]),
        method="shapley_sampled",
        n_samples=M,
        std_errors=se,
        instance_labels=_labels(m, x),
    )
