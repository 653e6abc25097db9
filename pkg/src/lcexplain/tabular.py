"""Typed tabular data: schema, dataset, CSV ingestion, splits, permutation and
a synthetic insurance loss-cost generator.

Feature values live in one float64 matrix ``X`` of shape ``(N, p)``.
Categorical columns hold level indices (stored as exact small floats) into
the level list owned by the schema, so a feature row can be substituted or
permuted column-wise without caring about its kind.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy import stats

from .errors import DataError, SchemaError
from .seeding import check_seed, derive_seed, make_rng


@dataclass(frozen=True)
class Numeric:
    def to_dict(self) -> dict:
        return {"type": "numeric"}


@dataclass(frozen=True)
class Categorical:
    levels: tuple[str, ...]

    def __post_init__(self):
        levels = tuple(str(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise SchemaError("categorical kind needs at least one level")
        if any(v == "" for v in levels):
            raise SchemaError("categorical levels must be non-empty strings")
        if len(set(levels)) != len(levels):
            raise SchemaError(f"duplicate categorical levels in {levels}")

    def index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise DataError(f"unknown level {level!r}") from None

    def to_dict(self) -> dict:
        return {"type": "categorical", "levels": list(self.levels)}


ColumnKind = Union[Numeric, Categorical]


def kind_from_dict(d: dict) -> ColumnKind:
    kind = d.get("type")
    if kind == "numeric":
        return Numeric()
    if kind == "categorical":
        return Categorical(tuple(d.get("levels", ())))
    raise SchemaError(f"unknown column type {kind!r}")


@dataclass(frozen=True)
class Feature:
    name: str
    kind: ColumnKind

    @property
    def is_categorical(self) -> bool:
        return isinstance(self.kind, Categorical)


@dataclass(frozen=True)
class Schema:
    features: tuple[Feature, ...]
    response: str = "loss_cost"
    weight: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if not names:
            raise SchemaError("schema needs at least one feature")
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.response in names:
            raise SchemaError("response name collides with a feature")
        if self.weight is not None and (self.weight in names or self.weight == self.response):
            raise SchemaError("weight name collides with a feature or the response")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def n_features(self) -> int:
        return len(self.features)

    def index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            j = int(name)
            if not 0 <= j < self.n_features:
                raise SchemaError(f"feature index {j} out of range")
            return j
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def __getitem__(self, name: str | int) -> Feature:
        return self.features[self.index(name)]

    def to_dict(self) -> dict:
        return {
            "features": [{"name": f.name, **f.kind.to_dict()} for f in self.features],
            "response": self.response,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        try:
            feats = tuple(Feature(f["name"], kind_from_dict(f)) for f in d["features"])
            return cls(feats, response=d.get("response", "loss_cost"), weight=d.get("weight"))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from None


def load_schema(path: str | Path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return Schema.from_dict(json.load(fh))


def validate_features(schema: Schema, X: np.ndarray) -> np.ndarray:
    """Check a feature matrix against ``schema``; returns it as float64 2-D."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != schema.n_features:
        raise SchemaError(f"expected {schema.n_features} feature columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("feature values must be finite")
    for j, feat in enumerate(schema.features):
        if feat.is_categorical:
            col = X[:, j]
            n_levels = len(feat.kind.levels)
            if np.any(col != np.floor(col)) or np.any(col < 0) or np.any(col >= n_levels):
                raise DataError(f"unknown level index in column {feat.name!r}")
    return X


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


class Dataset:
    """Immutable feature matrix, response and exposure weights."""

    def __init__(self, schema: Schema, X, y, w=None):
        X = validate_features(schema, X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n = X.shape[0]
        if n < 1:
            raise DataError("dataset needs at least one row")
        if y.shape[0] != n:
            raise DataError("response length does not match feature rows")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise DataError("response must be finite and non-negative")
        if w is None:
            w = np.ones(n)
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if w.shape[0] != n:
            raise DataError("weight length does not match feature rows")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DataError("non-positive weight")
        self.schema = schema
        self.X = _frozen(X)
        self.y = _frozen(y)
        self.w = _frozen(w)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def __repr__(self) -> str:
        return f"Dataset(n_rows={self.n_rows}, features={self.schema.names})"

    def column(self, j: str | int) -> np.ndarray:
        j = self.schema.index(j)
        col = self.X[:, j]
        if self.schema.features[j].is_categorical:
            return col.astype(np.int64)
        return col.copy()

    def take(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.schema, self.X[rows], self.y[rows], self.w[rows])

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(self.schema, X, self.y, self.w)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.w, other.w)
        )


def read_csv(path: str | Path, schema: Schema) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        wanted = schema.names + [schema.response] + ([schema.weight] if schema.weight else [])
        missing = [name for name in wanted if name not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {missing}")
        pos = {name: header.index(name) for name in wanted}

        X_rows, y, w = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            row = []
            for feat in schema.features:
                raw = rec[pos[feat.name]].strip()
                if feat.is_categorical:
                    try:
                        row.append(float(feat.kind.index(raw)))
                    except DataError:
                        raise DataError(
                            f"{path}:{lineno}: unknown level {raw!r} in column {feat.name!r}"
                        ) from None
                else:
                    row.append(_parse_number(raw, path, lineno, feat.name))
            X_rows.append(row)
            y.append(_parse_number(rec[pos[schema.response]].strip(), path, lineno, schema.response))
            if schema.weight:
                wt = _parse_number(rec[pos[schema.weight]].strip(), path, lineno, schema.weight)
                if wt <= 0:
                    raise DataError(f"{path}:{lineno}: non-positive weight {wt!r}")
                w.append(wt)
    if not X_rows:
        raise DataError(f"{path}: no data rows")
    X = np.array(X_rows, dtype=np.float64).reshape(len(X_rows), schema.n_features)
    return Dataset(schema, X, y, w if schema.weight else None)


def _parse_number(raw: str, path, lineno: int, name: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"{path}:{lineno}: unparseable number {raw!r} in column {name!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}:{lineno}: non-finite value in column {name!r}")
    return value


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write ``ds`` so that :func:`read_csv` reads back identical values."""
    schema = ds.schema
    header = schema.names + [schema.response] + ([schema.weight] if schema.weight else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(ds.n_rows):
            rec = []
            for j, feat in enumerate(schema.features):
                v = ds.X[i, j]
                rec.append(feat.kind.levels[int(v)] if feat.is_categorical else repr(float(v)))
            rec.append(repr(float(ds.y[i])))
            if schema.weight:
                rec.append(repr(float(ds.w[i])))
            writer.writerow(rec)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    assessment_fraction_of_remainder: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("test_fraction", "assessment_fraction_of_remainder"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v}")
        check_seed(self.seed)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_test = _round_half_up(spec.test_fraction * n)
    n_assess = _round_half_up(spec.assessment_fraction_of_remainder * (n - n_test))
    return n - n_test - n_assess, n_assess, n_test


def split(ds: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded (analysis, assessment, test) partition; rows keep their original order."""
    n = ds.n_rows
    sizes = split_sizes(n, spec)
    if n < 3 or min(sizes) < 1:
        raise DataError(f"{n} rows are too few to give every partition at least one row")
    order = make_rng(spec.seed).permutation(n)
    n_an, n_as, _ = sizes
    parts = (order[:n_an], order[n_an:n_an + n_as], order[n_an + n_as:])
    return tuple(ds.take(np.sort(p)) for p in parts)


def permute_column(ds: Dataset, j: str | int, seed: int) -> Dataset:
    j = ds.schema.index(j)
    X = np.array(ds.X, copy=True)
    X[:, j] = X[make_rng(seed).permutation(ds.n_rows), j]
    return ds.with_features(X)


# -- synthetic insurance data ----------------------------------------------

AGE_RANGES = ("18-25", "26-35", "36-45", "46-55", "56+")
SEXES = ("female", "male")
VEHICLE_CATEGORIES = ("passenger", "pickup", "utility")
MAKES = (
    "GM", "VW", "Fiat", "Ford", "Honda", "Toyota",
    "Hyundai", "Renault", "Nissan", "Citroen", "Peugeot", "Mitsubishi",
)
REGIONS = ("SP", "RJ", "MG", "RS", "PR", "SC", "BA", "PE", "GO", "DF")


@dataclass
class CategoricalEffect:
    levels: tuple[str, ...]
    probs: tuple[float, ...]
    multipliers: tuple[float, ...]

    def __post_init__(self):
        self.levels = tuple(self.levels)
        self.probs = tuple(float(p) for p in self.probs)
        self.multipliers = tuple(float(m) for m in self.multipliers)
        if not len(self.levels) == len(self.probs) == len(self.multipliers):
            raise ValueError("levels, probs and multipliers must have equal length")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-9):
            raise ValueError("level probabilities must be non-negative and sum to 1")
        if any(m <= 0 for m in self.multipliers):
            raise ValueError("multipliers must be positive")


@dataclass
class NumericEffect:
    """Multiplier ``exp(linear * v + quadratic * v**2)`` on a gamma-distributed
    integer feature clipped to ``[0, max_value]``."""

    linear: float = 0.0
    quadratic: float = 0.0
    gamma_shape: float = 2.0
    gamma_scale: float = 3.5
    max_value: float = 30.0

    def multiplier(self, v: np.ndarray) -> np.ndarray:
        return np.exp(self.linear * v + self.quadratic * v * v)


def _default_effects() -> dict:
    return {
        "age_range": CategoricalEffect(
            AGE_RANGES, (0.12, 0.25, 0.25, 0.20, 0.18), (1.8, 1.3, 1.0, 0.9, 1.05)
        ),
        "sex": CategoricalEffect(SEXES, (0.45, 0.55), (1.0, 1.0)),
        "vehicle_category": CategoricalEffect(VEHICLE_CATEGORIES, (0.75, 0.15, 0.10), (1.0, 1.3, 1.6)),
        "make": CategoricalEffect(
            MAKES,
            (0.18, 0.16, 0.14, 0.10, 0.08, 0.08, 0.06, 0.06, 0.05, 0.04, 0.03, 0.02),
            (1.0, 0.8, 0.7, 1.1, 1.3, 1.4, 0.9, 0.75, 1.2, 1.6, 1.5, 2.0),
        ),
        "vehicle_age": NumericEffect(linear=-0.07, quadratic=0.0018),
        "region": CategoricalEffect(
            REGIONS,
            (0.25, 0.15, 0.12, 0.10, 0.09, 0.08, 0.07, 0.06, 0.05, 0.03),
            (1.3, 1.5, 1.0, 0.85, 0.9, 0.8, 1.1, 1.2, 0.95, 1.25),
        ),
    }


FEATURE_ORDER = ("age_range", "sex", "vehicle_category", "make", "vehicle_age", "region")


@dataclass
class SyntheticSpec:
    """Ground-truth description of a frequency x severity loss process.

    Claim counts are Poisson with mean ``exposure * base_frequency * prod(multipliers)``;
    each claim costs a gamma draw with mean ``severity_mean``. The response is
    total loss divided by exposure. ``correlation`` couples the latent draws
    of ``age_range`` and ``vehicle_age`` through a Gaussian copula.
    """

    base_frequency: float = 0.6
    severity_mean: float = 10.0
    severity_shape: float = 4.0
    exposure_low: float = 0.25
    exposure_high: float = 1.0
    correlation: float = 0.0
    effects: dict = field(default_factory=_default_effects)

    def __post_init__(self):
        if set(self.effects) != set(FEATURE_ORDER):
            raise ValueError(f"effects must cover exactly {FEATURE_ORDER}")
        if not -1.0 < self.correlation < 1.0:
            raise ValueError("correlation must lie in (-1, 1)")
        if not 0.0 < self.exposure_low <= self.exposure_high:
            raise ValueError("need 0 < exposure_low <= exposure_high")
        if self.base_frequency <= 0 or self.severity_mean <= 0 or self.severity_shape <= 0:
            raise ValueError("frequency and severity parameters must be positive")
        if not isinstance(self.effects["vehicle_age"], NumericEffect):
            raise ValueError("vehicle_age effect must be numeric")

    def to_dict(self) -> dict:
        effects = {}
        for name in FEATURE_ORDER:
            e = self.effects[name]
            if isinstance(e, NumericEffect):
                effects[name] = {"kind": "numeric", **e.__dict__}
            else:
                effects[name] = {
                    "kind": "categorical",
                    "levels": list(e.levels),
                    "probs": list(e.probs),
                    "multipliers": list(e.multipliers),
                }
        out = {k: v for k, v in self.__dict__.items() if k != "effects"}
        out["effects"] = effects
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        d = dict(d)
        effects = _default_effects()
        for name, e in (d.pop("effects", None) or {}).items():
            if name not in effects:
                raise ValueError(f"unknown synthetic feature {name!r}")
            e = dict(e)
            kind = e.pop("kind", "numeric" if name == "vehicle_age" else "categorical")
            if kind == "numeric":
                effects[name] = NumericEffect(**e)
            else:
                base = effects[name]
                effects[name] = CategoricalEffect(
                    e.get("levels", base.levels), e.get("probs", base.probs), e.get("multipliers", base.multipliers)
                )
        return cls(effects=effects, **d)

    def schema(self) -> Schema:
        feats = []
        for name in FEATURE_ORDER:
            e = self.effects[name]
            kind = Numeric() if isinstance(e, NumericEffect) else Categorical(e.levels)
            feats.append(Feature(name, kind))
        return Schema(tuple(feats), response="loss_cost", weight="exposure")


@dataclass(frozen=True)
class GroundTruth:
    spec: SyntheticSpec

    def multiplier(self, X: np.ndarray, feature: str) -> np.ndarray:
        j = FEATURE_ORDER.index(feature)
        e = self.spec.effects[feature]
        col = np.asarray(X, dtype=np.float64)[:, j]
        if isinstance(e, NumericEffect):
            return e.multiplier(col)
        return np.asarray(e.multipliers)[col.astype(np.int64)]

    def expected_loss_cost(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        mu = np.full(X.shape[0], self.spec.base_frequency * self.spec.severity_mean)
        for name in FEATURE_ORDER:
            mu = mu * self.multiplier(X, name)
        return mu

    def null_features(self) -> list[str]:
        out = []
        for name in FEATURE_ORDER:
            e = self.spec.effects[name]
            if isinstance(e, NumericEffect):
                if e.linear == 0 and e.quadratic == 0:
                    out.append(name)
            elif all(m == e.multipliers[0] for m in e.multipliers):
                out.append(name)
        return out


def generate_synthetic(n: int, gen_seed: int, spec: SyntheticSpec | None = None) -> tuple[Dataset, GroundTruth]:
    if n < 1:
        raise ValueError("n must be at least 1")
    spec = spec or SyntheticSpec()
    rng = make_rng(derive_seed(gen_seed, "synthetic"))

    # Gaussian copula latents; only age_range and vehicle_age are coupled.
    z = rng.standard_normal((n, len(FEATURE_ORDER)))
    ia, iv = FEATURE_ORDER.index("age_range"), FEATURE_ORDER.index("vehicle_age")
    rho = spec.correlation
    z[:, iv] = rho * z[:, ia] + math.sqrt(1.0 - rho * rho) * z[:, iv]
    u = stats.norm.cdf(z)

    X = np.empty((n, len(FEATURE_ORDER)))
    for j, name in enumerate(FEATURE_ORDER):
        e = spec.effects[name]
        if isinstance(e, NumericEffect):
            v = np.floor(stats.gamma.ppf(u[:, j], a=e.gamma_shape, scale=e.gamma_scale))
            X[:, j] = np.clip(v, 0.0, e.max_value)
        else:
            cdf = np.cumsum(e.probs)
            cdf[-1] = 1.0
            X[:, j] = np.minimum(np.searchsorted(cdf, u[:, j], side="right"), len(e.levels) - 1)

    exposure = rng.uniform(spec.exposure_low, spec.exposure_high, size=n)
    truth = GroundTruth(spec)
    freq = exposure * truth.expected_loss_cost(X) / spec.severity_mean
    counts = rng.poisson(freq)
    # Sum of k iid Gamma(shape, scale) is Gamma(k * shape, scale).
    scale = spec.severity_mean / spec.severity_shape
    total = np.zeros(n)
    has = counts > 0
    total[has] = rng.gamma(counts[has] * spec.severity_shape, scale)
    y = total / exposure
    return Dataset(spec.schema(), X, y, exposure), truth
