"""Feedforward network for loss cost with categorical embeddings.

Input encoding per feature: numeric columns are centred and scaled with
statistics frozen from the analysis data, low-cardinality categoricals are
one-hot encoded and high-cardinality ones are looked up in a trainable
2-dimensional embedding table. Two ReLU hidden layers (64 units by default)
feed a softplus output, so predictions are always positive.

Training minimises exposure-weighted squared error with Adam and keeps the
weights from the epoch with the lowest assessment loss.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, SchemaError
from ..seeding import derive_seed, make_rng
from ..tabular import Dataset, Schema
from .base import Predictor, sigmoid, softplus, weighted_loss

log = logging.getLogger(__name__)

EMBEDDING_DIM = 2
# Features embedded rather than one-hot encoded when present in the schema.
DEFAULT_EMBEDDED = ("make", "region")
# Other categoricals with more levels than this are embedded too.
ONE_HOT_MAX_LEVELS = 10


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    batch_size: int | None = None  # None -> min(10000, N)
    early_stopping_patience: int = 5
    max_epochs: int = 100
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    embed: tuple[str, ...] | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.embed is not None:
            self.embed = tuple(self.embed)
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.early_stopping_patience < 1:
            raise ValueError("early_stopping_patience must be at least 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden layer sizes must be positive")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["hidden"] = list(self.hidden)
        d["embed"] = None if self.embed is None else list(self.embed)
        return d


@dataclass
class Encoder:
    """How one feature becomes columns of the network input."""

    kind: str  # "numeric" | "onehot" | "embed"
    width: int
    center: float = 0.0
    scale: float = 1.0


def build_encoders(schema: Schema, analysis: Dataset | None, embed=None) -> list[Encoder]:
    if embed is None:
        embed = [
            f.name
            for f in schema.features
            if f.is_categorical and (f.name in DEFAULT_EMBEDDED or len(f.kind.levels) > ONE_HOT_MAX_LEVELS)
        ]
    for name in embed:
        if not schema[name].is_categorical:
            raise SchemaError(f"cannot embed numeric feature {name!r}")
    encoders = []
    for j, feat in enumerate(schema.features):
        if not feat.is_categorical:
            center, scale = 0.0, 1.0
            if analysis is not None:
                col = analysis.X[:, j]
                center = float(np.mean(col))
                scale = float(np.std(col))
                if not scale > 0:
                    scale = 1.0
            encoders.append(Encoder("numeric", 1, center, scale))
        elif feat.name in embed:
            encoders.append(Encoder("embed", EMBEDDING_DIM))
        else:
            encoders.append(Encoder("onehot", len(feat.kind.levels)))
    return encoders


class NnModel(Predictor):
    kind = "nn"

    def __init__(self, schema: Schema, encoders: list[Encoder], params: dict[str, np.ndarray],
                 hidden: tuple[int, ...] = (64, 64)):
        self.schema = schema
        self.encoders = list(encoders)
        self.hidden = tuple(hidden)
        self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        expected = param_shapes(schema, self.encoders, self.hidden)
        if list(self.params) != list(expected):
            raise ValueError(f"parameter names {list(self.params)} do not match {list(expected)}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")
        for v in self.params.values():
            v.flags.writeable = False
        self.history: TrainingHistory | None = None

    @property
    def input_width(self) -> int:
        return sum(e.width for e in self.encoders)

    def encode(self, X: np.ndarray, params=None) -> np.ndarray:
        params = self.params if params is None else params
        return encode(self.schema, self.encoders, params, X)

    def _predict(self, X):
        return forward(self.schema, self.encoders, self.params, X, len(self.hidden))[0]

    def to_dict(self) -> dict:
        return {
            "hidden": list(self.hidden),
            "encoders": [e.__dict__ for e in self.encoders],
            "params": {k: {"shape": list(v.shape), "values": [float(x) for x in v.ravel()]}
                       for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, schema: Schema, d: dict) -> "NnModel":
        encoders = [Encoder(**e) for e in d["encoders"]]
        params = {k: np.array(v["values"], dtype=np.float64).reshape(v["shape"]) for k, v in d["params"].items()}
        return cls(schema, encoders, params, tuple(d["hidden"]))


def param_shapes(schema: Schema, encoders: list[Encoder], hidden) -> dict[str, tuple]:
    shapes = {}
    for feat, enc in zip(schema.features, encoders):
        if enc.kind == "embed":
            shapes[f"emb:{feat.name}"] = (len(feat.kind.levels), EMBEDDING_DIM)
    width = sum(e.width for e in encoders)
    sizes = [width, *hidden, 1]
    for k in range(len(sizes) - 1):
        shapes[f"W{k + 1}"] = (sizes[k], sizes[k + 1])
        shapes[f"b{k + 1}"] = (sizes[k + 1],)
    return shapes


def encode(schema, encoders, params, X) -> np.ndarray:
    cols = []
    for j, (feat, enc) in enumerate(zip(schema.features, encoders)):
        v = X[:, j]
        if enc.kind == "numeric":
            cols.append(((v - enc.center) / enc.scale)[:, None])
        elif enc.kind == "onehot":
            oh = np.zeros((X.shape[0], enc.width))
            oh[np.arange(X.shape[0]), v.astype(np.int64)] = 1.0
            cols.append(oh)
        else:
            cols.append(params[f"emb:{feat.name}"][v.astype(np.int64)])
    return np.hstack(cols)


def forward(schema, encoders, params, X, n_hidden):
    """Returns predictions plus the cached activations needed for backprop."""
    h = encode(schema, encoders, params, X)
    acts = [h]
    pre = []
    for k in range(1, n_hidden + 1):
        z = h @ params[f"W{k}"] + params[f"b{k}"]
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    k = n_hidden + 1
    z_out = (h @ params[f"W{k}"] + params[f"b{k}"])[:, 0]
    pre.append(z_out)
    return softplus(z_out), acts, pre


def loss_and_grad(schema, encoders, params, X, y, w, n_hidden):
    """Weighted squared error and its gradient with respect to every parameter."""
    pred, acts, pre = forward(schema, encoders, params, X, n_hidden)
    sw = np.sum(w)
    r = pred - y
    loss = float(np.dot(w, r * r) / sw)

    grads = {}
    delta = (2.0 * w * r / sw * sigmoid(pre[-1]))[:, None]
    for k in range(n_hidden + 1, 0, -1):
        grads[f"W{k}"] = acts[k - 1].T @ delta
        grads[f"b{k}"] = delta.sum(axis=0)
        delta = delta @ params[f"W{k}"].T
        if k > 1:
            delta = delta * (pre[k - 2] > 0)

    offset = 0
    for j, (feat, enc) in enumerate(zip(schema.features, encoders)):
        if enc.kind == "embed":
            name = f"emb:{feat.name}"
            g = np.zeros_like(params[name])
            np.add.at(g, X[:, j].astype(np.int64), delta[:, offset:offset + enc.width])
            grads[name] = g
        offset += enc.width
    return loss, {name: grads[name] for name in params}


def init_params(schema, encoders, hidden, seed: int) -> dict[str, np.ndarray]:
    rng = make_rng(seed)
    params = {}
    shapes = param_shapes(schema, encoders, hidden)
    n_layers = len(hidden) + 1
    for name, shape in shapes.items():
        if name.startswith("emb:"):
            params[name] = rng.uniform(-0.05, 0.05, size=shape)
        elif name.startswith("W"):
            fan_in = shape[0]
            # He-uniform for ReLU layers, LeCun-uniform for the softplus output
            gain = 3.0 if int(name[1:]) == n_layers else 6.0
            limit = np.sqrt(gain / fan_in)
            params[name] = rng.uniform(-limit, limit, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


def inverse_softplus(v: float) -> float:
    return float(v + np.log(-np.expm1(-v)))


@dataclass
class TrainingHistory:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_assessment_loss: float = float("inf")
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "best_assessment_loss": self.best_assessment_loss,
            "stopped_early": self.stopped_early,
            "n_epochs": len(self.epochs),
        }


class Adam:
    def __init__(self, params: dict, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def fit_nn(analysis: Dataset, assessment: Dataset, cfg: TrainConfig | None = None) -> NnModel:
    cfg = cfg or TrainConfig()
    if analysis.schema != assessment.schema:
        raise SchemaError("analysis and assessment sets must share a schema")
    schema = analysis.schema
    encoders = build_encoders(schema, analysis, cfg.embed)
    params = init_params(schema, encoders, cfg.hidden, derive_seed(cfg.seed, "nn-init"))
    out_bias = f"b{len(cfg.hidden) + 1}"
    mean_y = float(np.dot(analysis.w, analysis.y) / analysis.w.sum())
    params[out_bias][:] = inverse_softplus(max(mean_y, 1e-6))

    n_hidden = len(cfg.hidden)
    history = TrainingHistory()
    batch = cfg.batch_size or min(10_000, analysis.n_rows)
    best = {k: v.copy() for k, v in params.items()}
    history.best_assessment_loss = _eval_loss(schema, encoders, params, assessment, n_hidden)
    adam = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    shuffle_rng = make_rng(derive_seed(cfg.seed, "nn-shuffle"))
    stale = 0
    X, y, w = analysis.X, analysis.y, analysis.w

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(analysis.n_rows)
        for start in range(0, analysis.n_rows, batch):
            idx = order[start:start + batch]
            loss, grads = loss_and_grad(schema, encoders, params, X[idx], y[idx], w[idx], n_hidden)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise DivergenceError(epoch)
            adam.step(params, grads)

        train_loss = _eval_loss(schema, encoders, params, analysis, n_hidden)
        assess_loss = _eval_loss(schema, encoders, params, assessment, n_hidden)
        if not (np.isfinite(train_loss) and np.isfinite(assess_loss)):
            raise DivergenceError(epoch)
        improved = assess_loss < history.best_assessment_loss
        history.epochs.append(
            {"epoch": epoch, "analysis_loss": train_loss, "assessment_loss": assess_loss, "improved": improved}
        )
        log.info("epoch %d analysis %.6g assessment %.6g%s", epoch, train_loss, assess_loss,
                 " *" if improved else "")
        if improved:
            history.best_assessment_loss = assess_loss
            history.best_epoch = epoch
            best = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stopping_patience:
                history.stopped_early = True
                break

    model = NnModel(schema, encoders, best, cfg.hidden)
    model.history = history
    return model


def _eval_loss(schema, encoders, params, ds: Dataset, n_hidden) -> float:
    pred = forward(schema, encoders, params, ds.X, n_hidden)[0]
    return weighted_loss(pred, ds.y, ds.w)
