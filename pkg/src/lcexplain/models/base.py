from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import DataError
from ..tabular import Schema, validate_features

_SMALLEST_POSITIVE = np.nextafter(0.0, 1.0)


class Predictor:
    """A fitted model: a pure function from feature rows to real predictions.

    Subclasses implement ``_predict`` on a validated float64 matrix.
    """

    kind = "predictor"
    schema: Schema

    def predict(self, X) -> np.ndarray:
        X = validate_features(self.schema, getattr(X, "X", X))
        out = self._predict(X)
        if not np.all(np.isfinite(out)):
            raise DataError(f"{self.kind} produced non-finite predictions")
        return out

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FunctionModel(Predictor):
    """Wraps a vectorised callable ``fn(X) -> predictions`` as a Predictor."""

    kind = "function"

    def __init__(self, schema: Schema, fn: Callable[[np.ndarray], np.ndarray]):
        self.schema = schema
        self.fn = fn

    def _predict(self, X):
        return np.asarray(self.fn(X), dtype=np.float64).reshape(X.shape[0])


def weighted_loss(pred, y, w=None) -> float:
    """Weighted mean squared error ``sum(w * (pred - y)**2) / sum(w)``."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if pred.shape != y.shape:
        raise DataError(f"length mismatch: {pred.shape[0]} predictions vs {y.shape[0]} responses")
    if w is None:
        w = np.ones_like(y)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != y.shape:
        raise DataError("length mismatch between weights and responses")
    if np.any(w <= 0):
        raise DataError("weights must be positive")
    r = pred - y
    return float(np.dot(w, r * r) / np.sum(w))


def softplus(z):
    # floor at the smallest subnormal: exp(z) underflows to 0 below z ~ -745
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(np.logaddexp(0.0, z), _SMALLEST_POSITIVE)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
