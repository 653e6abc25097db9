"""Generalized linear models with a log or identity link.

Terms are written as strings and parsed against the schema:

* ``"vehicle_age"`` numeric main effect
* ``"vehicle_age^2"`` power of a numeric feature
* ``"sex=male"`` indicator of one categorical level
* ``"sex"`` expands to indicators of every level except the first
* ``"age:vehicle_age"``, ``"sex=male:age"`` products of the above

Coefficients minimise the exposure-weighted squared error on the response
scale. The identity link is solved in closed form; the log link uses damped
Gauss-Newton (Levenberg-Marquardt) iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, FitError, SchemaError
from ..tabular import Dataset, Schema
from .base import Predictor, weighted_loss

LINKS = ("log", "identity")


@dataclass(frozen=True)
class Factor:
    feature: int
    power: int = 1
    level: int | None = None

    def value(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature]
        if self.level is not None:
            return (col == self.level).astype(np.float64)
        if self.power == 1:
            return col
        return col**self.power

    def label(self, schema: Schema) -> str:
        feat = schema.features[self.feature]
        if self.level is not None:
            return f"{feat.name}={feat.kind.levels[self.level]}"
        return feat.name if self.power == 1 else f"{feat.name}^{self.power}"


Term = tuple[Factor, ...]


def _parse_factor(token: str, schema: Schema) -> list[Factor]:
    token = token.strip()
    if "=" in token:
        name, level = (s.strip() for s in token.split("=", 1))
        feat = schema[name]
        if not feat.is_categorical:
            raise SchemaError(f"level indicator on numeric feature {name!r}")
        return [Factor(schema.index(name), level=feat.kind.index(level))]
    if "^" in token:
        name, power = (s.strip() for s in token.split("^", 1))
        if schema[name].is_categorical:
            raise SchemaError(f"power of categorical feature {name!r}")
        try:
            p = int(power)
        except ValueError:
            raise SchemaError(f"bad power in term {token!r}") from None
        if p < 1:
            raise SchemaError(f"bad power in term {token!r}")
        return [Factor(schema.index(name), power=p)]
    feat = schema[token]
    j = schema.index(token)
    if feat.is_categorical:
        return [Factor(j, level=k) for k in range(1, len(feat.kind.levels))]
    return [Factor(j)]


def parse_terms(specs: list[str], schema: Schema) -> list[Term]:
    """Expand term strings into products of factors (categoricals expand to dummies)."""
    terms: list[Term] = []
    for spec in specs:
        expanded: list[Term] = [()]
        for token in spec.split(":"):
            options = _parse_factor(token, schema)
            expanded = [t + (f,) for t in expanded for f in options]
        for t in expanded:
            if t not in terms:
                terms.append(t)
    return terms


def term_label(term: Term, schema: Schema) -> str:
    return ":".join(f.label(schema) for f in term)


class GlmModel(Predictor):
    kind = "glm"

    def __init__(self, schema: Schema, terms: list[str] | list[Term], coef, link: str = "log"):
        if link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}")
        self.schema = schema
        self.link = link
        if all(isinstance(t, tuple) for t in terms):
            self.terms = list(terms)
        else:
            self.terms = parse_terms(list(terms), schema)
        self.coef = np.array(coef, dtype=np.float64).reshape(-1)
        if self.coef.shape[0] != len(self.terms) + 1:
            raise ValueError(
                f"{len(self.terms)} terms need {len(self.terms) + 1} coefficients, got {self.coef.shape[0]}"
            )
        self.coef.flags.writeable = False

    @property
    def term_labels(self) -> list[str]:
        return [term_label(t, self.schema) for t in self.terms]

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        # column-wise accumulation keeps batched and row-at-a-time results bit-identical
        eta = np.full(X.shape[0], self.coef[0])
        for b, term in zip(self.coef[1:], self.terms):
            eta = eta + b * term_values(term, X)
        return eta

    def _predict(self, X):
        eta = self.linear_predictor(X)
        return np.exp(eta) if self.link == "log" else eta

    def to_dict(self) -> dict:
        return {"link": self.link, "terms": self.term_labels, "coef": [float(c) for c in self.coef]}

    @classmethod
    def from_dict(cls, schema: Schema, d: dict) -> "GlmModel":
        return cls(schema, d["terms"], d["coef"], d["link"])


def term_values(term: Term, X: np.ndarray) -> np.ndarray:
    v = term[0].value(X)
    for f in term[1:]:
        v = v * f.value(X)
    return v


def design_matrix(terms: list[Term], X: np.ndarray) -> np.ndarray:
    D = np.empty((X.shape[0], len(terms) + 1))
    D[:, 0] = 1.0
    for k, t in enumerate(terms, start=1):
        D[:, k] = term_values(t, X)
    return D


def fit_glm(
    ds: Dataset,
    terms: list[str],
    link: str = "log",
    ridge: float = 0.0,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> GlmModel:
    if link not in LINKS:
        raise ValueError(f"link must be one of {LINKS}")
    parsed = parse_terms(terms, ds.schema)
    D = design_matrix(parsed, ds.X)
    y, w = ds.y, ds.w
    sw = np.sqrt(w)
    penalty = np.full(D.shape[1], ridge)
    penalty[0] = 0.0

    if ridge <= 0 and np.linalg.matrix_rank(D * sw[:, None]) < D.shape[1]:
        raise FitError("singular design matrix; drop collinear terms or set ridge > 0")

    if link == "identity":
        coef = _weighted_lstsq(D, y, w, penalty)
        return GlmModel(ds.schema, parsed, coef, link)

    if np.all(y > 0):
        coef = _weighted_lstsq(D, np.log(y), w, penalty)
    else:
        coef = np.zeros(D.shape[1])
        coef[0] = np.log(max(np.dot(w, y) / w.sum(), 1e-12))
    coef = _levenberg_marquardt(D, y, w, penalty, coef, max_iter, tol)
    return GlmModel(ds.schema, parsed, coef, link)


def _weighted_lstsq(D, y, w, penalty):
    sw = np.sqrt(w)
    A = D * sw[:, None]
    b = y * sw
    if np.any(penalty > 0):
        A = np.vstack([A, np.diag(np.sqrt(penalty))])
        b = np.concatenate([b, np.zeros(D.shape[1])])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return coef


def _objective(D, y, w, penalty, coef):
    with np.errstate(over="ignore"):
        mu = np.exp(D @ coef)
    r = mu - y
    return float(np.dot(w, r * r) + np.dot(penalty, coef * coef)), mu


def _levenberg_marquardt(D, y, w, penalty, coef, max_iter, tol):
    obj, mu = _objective(D, y, w, penalty, coef)
    damping = 1e-3
    for _ in range(max_iter):
        J = D * mu[:, None]
        JtW = J.T * w
        H = JtW @ J + np.diag(penalty)
        g = JtW @ (y - mu) - penalty * coef
        if np.max(np.abs(g)) <= tol * max(1.0, obj):
            return coef
        scale = np.diag(H).copy()
        scale[scale <= 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(H + damping * np.diag(scale), g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                trial = coef + step
                new_obj, new_mu = _objective(D, y, w, penalty, trial)
                if np.isfinite(new_obj) and new_obj <= obj:
                    break
            damping *= 10.0
            if damping > 1e16:
                return coef
        done = obj - new_obj <= tol * max(obj, 1e-300) or np.max(np.abs(step)) <= tol * (1 + np.max(np.abs(coef)))
        coef, obj, mu = trial, new_obj, new_mu
        damping = max(damping / 10.0, 1e-12)
        if done:
            return coef
    raise ConvergenceError(f"log-link GLM did not converge in {max_iter} iterations")


def glm_training_loss(model: GlmModel, ds: Dataset) -> float:
    return weighted_loss(model.predict(ds.X), ds.y, ds.w)
