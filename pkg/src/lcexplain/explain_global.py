"""Model-level explanations: permutation importance, partial dependence,
individual conditional expectation and accumulated local effects.

Every function takes any :class:`~lcexplain.models.Predictor` and a
:class:`~lcexplain.tabular.Dataset` and never modifies the dataset; perturbed
copies are built per call.

Randomness in permutation importance is split per work unit: repetition
``b`` of feature ``j`` uses ``derive_seed(seed, "importance:<j>", b)``, so
results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numeric import stable_mean
from .errors import DataError, SchemaError
from .models.base import Predictor, weighted_loss
from .seeding import derive_seed, make_rng
from .tabular import Dataset, permute_column

LOSSES = ("weighted_mse", "mse")
DEFAULT_GRID_POINTS = 21
DEFAULT_HIST_BINS = 20
DEFAULT_ALE_BINS = 10
DEFAULT_REPETITIONS = 5


def _check_schema(m: Predictor, ds: Dataset) -> None:
    if m.schema != ds.schema:
        raise SchemaError("dataset schema does not match the model's schema")


def _loss(kind: str, pred, ds: Dataset) -> float:
    if kind == "weighted_mse":
        return weighted_loss(pred, ds.y, ds.w)
    if kind == "mse":
        return weighted_loss(pred, ds.y)
    raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


# -- permutation importance -------------------------------------------------


@dataclass
class ImportanceEntry:
    name: str
    permuted_loss: float
    vi: float
    repetitions: list[float]  # permuted loss of each repetition


@dataclass
class ImportanceReport:
    baseline_loss: float
    entries: list[ImportanceEntry]
    loss: str = "weighted_mse"
    seed: int = 0
    B: int = DEFAULT_REPETITIONS

    artifact_type = "importance"

    def __getitem__(self, name: str) -> ImportanceEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def repetition_vi(self, name: str) -> list[float]:
        return [r - self.baseline_loss for r in self[name].repetitions]

    def ranked(self) -> list[ImportanceEntry]:
        """Entries sorted by decreasing importance (stable for ties)."""
        return sorted(self.entries, key=lambda e: -e.vi)

    def to_dict(self) -> dict:
        return {
            "type": self.artifact_type,
            "baseline_loss": self.baseline_loss,
            "loss": self.loss,
            "seed": self.seed,
            "B": self.B,
            "entries": [
                {"name": e.name, "permuted_loss": e.permuted_loss, "vi": e.vi, "repetitions": list(e.repetitions)}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImportanceReport":
        return cls(
            baseline_loss=d["baseline_loss"],
            entries=[ImportanceEntry(e["name"], e["permuted_loss"], e["vi"], list(e["repetitions"]))
                     for e in d["entries"]],
            loss=d["loss"],
            seed=d["seed"],
            B=d["B"],
        )


def permutation_importance(
    m: Predictor,
    ds: Dataset,
    loss: str = "weighted_mse",
    B: int = DEFAULT_REPETITIONS,
    seed: int = 0,
    features=None,
) -> ImportanceReport:
    """Increase in loss when each feature column is randomly rearranged.

    The baseline loss is computed once on the unpermuted data; each feature
    gets ``B`` independently seeded permutations and its importance is the
    mean permuted loss minus the baseline.
    """
    _check_schema(m, ds)
    if B < 1:
        raise ValueError("B must be at least 1")
    baseline = _loss(loss, m.predict(ds.X), ds)
    names = ds.schema.names if features is None else [ds.schema[f].name for f in features]
    entries = []
    for name in names:
        j = ds.schema.index(name)
        reps = []
        for b in range(B):
            permuted = permute_column(ds, j, derive_seed(seed, f"importance:{j}", b))
            reps.append(_loss(loss, m.predict(permuted.X), ds))
        permuted_loss = stable_mean(reps)
        entries.append(ImportanceEntry(name, permuted_loss, permuted_loss - baseline, reps))
    return ImportanceReport(baseline, entries, loss, seed, B)


# -- curves -----------------------------------------------------------------


@dataclass
class Histogram:
    """Counts of a feature over the evaluation data: ``edges`` for numerics
    (``len(counts) + 1`` values), ``levels`` for categoricals."""

    counts: list[int]
    edges: list[float] | None = None
    levels: list[str] | None = None

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "edges": self.edges, "levels": self.levels}

    @classmethod
    def from_dict(cls, d: dict) -> "Histogram":
        return cls(list(d["counts"]), d.get("edges"), d.get("levels"))


@dataclass
class CurveSet:
    kind: str  # "pdp" | "ice" | "ale"
    feature: str
    grid: list[float]
    values: list  # pdp/ale: one per grid point; ice: one list per instance
    histogram: Histogram
    grid_labels: list[str] | None = None
    instances: list[int] | None = None
    bin_edges: list[float] | None = None
    bin_effects: list[float] | None = None
    bin_counts: list[int] | None = None

    artifact_type = "curves"

    @property
    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "type": self.artifact_type,
            "kind": self.kind,
            "feature": self.feature,
            "grid": list(self.grid),
            "grid_labels": self.grid_labels,
            "values": self.values,
            "instances": self.instances,
            "histogram": self.histogram.to_dict(),
            "bin_edges": self.bin_edges,
            "bin_effects": self.bin_effects,
            "bin_counts": self.bin_counts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurveSet":
        return cls(
            kind=d["kind"],
            feature=d["feature"],
            grid=list(d["grid"]),
            values=d["values"],
            histogram=Histogram.from_dict(d["histogram"]),
            grid_labels=d.get("grid_labels"),
            instances=d.get("instances"),
            bin_edges=d.get("bin_edges"),
            bin_effects=d.get("bin_effects"),
            bin_counts=d.get("bin_counts"),
        )


def feature_histogram(ds: Dataset, j: int, bins: int = DEFAULT_HIST_BINS) -> Histogram:
    feat = ds.schema.features[j]
    col = ds.X[:, j]
    if feat.is_categorical:
        counts = np.bincount(col.astype(np.int64), minlength=len(feat.kind.levels))
        return Histogram([int(c) for c in counts], levels=list(feat.kind.levels))
    counts, edges = np.histogram(col, bins=bins)
    return Histogram([int(c) for c in counts], edges=[float(e) for e in edges])


def make_grid(ds: Dataset, j: int, grid=None, extrapolate: bool = False) -> np.ndarray:
    """Grid of values for feature ``j``.

    ``None`` gives every level of a categorical, or 21 equispaced points
    between the 1st and 99th percentiles of a numeric; an int gives that many
    equispaced points for a numeric (every level for a categorical); a
    sequence is used as given (level names allowed).
    """
    feat = ds.schema.features[j]
    if feat.is_categorical:
        if grid is None or isinstance(grid, (int, np.integer)):
            return np.arange(len(feat.kind.levels), dtype=np.float64)
        out = []
        for g in grid:
            out.append(float(feat.kind.index(g)) if isinstance(g, str) else float(g))
        out = np.asarray(out, dtype=np.float64)
        if out.size == 0:
            raise ValueError("empty grid")
        if np.any(out != np.floor(out)) or np.any(out < 0) or np.any(out >= len(feat.kind.levels)):
            raise DataError(f"unknown level in grid for {feat.name!r}")
        return out

    col = ds.X[:, j]
    if grid is None or isinstance(grid, (int, np.integer)):
        n = DEFAULT_GRID_POINTS if grid is None else int(grid)
        if n < 1:
            raise ValueError("empty grid")
        lo, hi = np.percentile(col, [1.0, 99.0])
        return np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
    out = np.asarray(list(grid), dtype=np.float64)
    if out.size == 0:
        raise ValueError("empty grid")
    if not extrapolate and (out.min() < col.min() or out.max() > col.max()):
        raise DataError(f"grid leaves the observed range of {feat.name!r}; pass extrapolate=True to allow")
    return out


def _grid_labels(ds: Dataset, j: int, grid: np.ndarray):
    feat = ds.schema.features[j]
    if feat.is_categorical:
        return [feat.kind.levels[int(g)] for g in grid]
    return None


def ice_matrix(m: Predictor, X: np.ndarray, j: int, grid: np.ndarray) -> np.ndarray:
    """Predictions with column ``j`` of every row set to each grid value; shape (rows, grid)."""
    out = np.empty((X.shape[0], grid.size))
    Xz = np.array(X, copy=True)
    for g, z in enumerate(grid):
        Xz[:, j] = z
        out[:, g] = m.predict(Xz)
    return out


def _pdp_from_ice(ice: np.ndarray) -> np.ndarray:
    return np.array([stable_mean(ice[:, g]) for g in range(ice.shape[1])])


def pdp(m: Predictor, ds: Dataset, j, grid=None, extrapolate: bool = False) -> CurveSet:
    """Partial dependence: the average prediction over all rows with feature
    ``j`` overwritten by each grid value."""
    _check_schema(m, ds)
    j = ds.schema.index(j)
    z = make_grid(ds, j, grid, extrapolate)
    values = _pdp_from_ice(ice_matrix(m, ds.X, j, z))
    return CurveSet(
        kind="pdp",
        feature=ds.schema.names[j],
        grid=[float(v) for v in z],
        values=[float(v) for v in values],
        histogram=feature_histogram(ds, j),
        grid_labels=_grid_labels(ds, j, z),
    )


def select_instances(ds: Dataset, instances=None, seed: int = 0) -> np.ndarray:
    """Row indices for ICE: all rows (None), a seeded sample of ``k`` rows
    (int), or an explicit index list."""
    if instances is None:
        return np.arange(ds.n_rows)
    if isinstance(instances, (int, np.integer)):
        k = int(instances)
        if k < 1:
            raise ValueError("need at least one instance")
        if k >= ds.n_rows:
            return np.arange(ds.n_rows)
        return np.sort(make_rng(derive_seed(seed, "ice-instances")).choice(ds.n_rows, size=k, replace=False))
    rows = np.asarray(list(instances), dtype=np.int64)
    if rows.size == 0 or rows.min() < 0 or rows.max() >= ds.n_rows:
        raise DataError("selected instances do not exist in the dataset")
    return rows


def ice(m: Predictor, ds: Dataset, j, grid=None, instances=None, seed: int = 0,
        extrapolate: bool = False) -> CurveSet:
    """One curve per selected instance; their mean over all rows is the PDP."""
    _check_schema(m, ds)
    j = ds.schema.index(j)
    z = make_grid(ds, j, grid, extrapolate)
    rows = select_instances(ds, instances, seed)
    curves = ice_matrix(m, ds.X[rows], j, z)
    return CurveSet(
        kind="ice",
        feature=ds.schema.names[j],
        grid=[float(v) for v in z],
        values=[[float(v) for v in row] for row in curves],
        histogram=feature_histogram(ds, j),
        grid_labels=_grid_labels(ds, j, z),
        instances=[int(r) for r in rows],
    )


def ice_mean(curves: CurveSet) -> np.ndarray:
    return _pdp_from_ice(curves.values_array)


def quantile_bins(x: np.ndarray, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantile edges with empty bins merged, and each value's bin number (1-based).

    Bin ``k`` holds values in ``(edges[k-1], edges[k]]``; the first bin also
    holds ``edges[0]``.
    """
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)))
    if edges.size < 2:
        raise DataError("all feature values are identical")
    while True:
        k = np.clip(np.searchsorted(edges, x, side="left"), 1, edges.size - 1)
        counts = np.bincount(k, minlength=edges.size)[1:]
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return edges, k
        b = empty[0] + 1
        # merge into the following bin, or the previous one for the last bin
        edges = np.delete(edges, b if b < edges.size - 1 else b - 1)


def ale(m: Predictor, ds: Dataset, j, n_bins: int = DEFAULT_ALE_BINS) -> CurveSet:
    """First-order accumulated local effects of a numeric feature.

    Within each quantile bin, rows are moved to the bin's upper and lower
    edges (other features unchanged) and the prediction differences averaged.
    The running sum of those bin effects, evaluated at the edges, is centred
    so its count-weighted mean over the data is zero.
    """
    _check_schema(m, ds)
    j = ds.schema.index(j)
    feat = ds.schema.features[j]
    if feat.is_categorical:
        raise DataError(f"ALE is only supported for numeric features, {feat.name!r} is categorical")
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    x = ds.X[:, j]
    edges, k = quantile_bins(x, n_bins)
    n_intervals = edges.size - 1

    X_hi = np.array(ds.X, copy=True)
    X_lo = np.array(ds.X, copy=True)
    X_hi[:, j] = edges[k]
    X_lo[:, j] = edges[k - 1]
    diff = m.predict(X_hi) - m.predict(X_lo)

    effects = np.array([stable_mean(diff[k == b]) for b in range(1, n_intervals + 1)])
    counts = np.bincount(k, minlength=n_intervals + 1)[1:]
    accumulated = np.concatenate([[0.0], np.cumsum(effects)])
    midpoints = 0.5 * (accumulated[:-1] + accumulated[1:])
    center = float(np.dot(counts, midpoints) / counts.sum())
    values = accumulated - center
    return CurveSet(
        kind="ale",
        feature=feat.name,
        grid=[float(v) for v in edges],
        values=[float(v) for v in values],
        histogram=feature_histogram(ds, j),
        bin_edges=[float(v) for v in edges],
        bin_effects=[float(v) for v in effects],
        bin_counts=[int(c) for c in counts],
    )
