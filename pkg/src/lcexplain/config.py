"""Run configuration: JSON with every key defaulted.

A user file only needs the keys it changes; :func:`load_config` deep-merges
it over :data:`DEFAULTS` and validates the result. ``lcexplain print-config``
prints the defaults.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .errors import LcExplainError
from .seeding import check_seed
from .tabular import SyntheticSpec

DEFAULTS: dict = {
    "seed": 20200101,
    "data": {
        "source": "synthetic",
        "n": 50000,
        "synthetic": SyntheticSpec().to_dict(),
        "csv": None,
        "schema": None,
    },
    "split": {"test_fraction": 0.2, "assessment_fraction_of_remainder": 0.25},
    "model": {
        "type": "nn",
        "glm": {
            "terms": ["age_range", "sex", "vehicle_category", "make", "vehicle_age", "vehicle_age^2", "region"],
            "link": "log",
            "ridge": 0.0,
        },
        "tree": {"max_depth": 5, "min_leaf_size": 50},
        "nn": {
            "learning_rate": 0.1,
            "batch_size": None,
            "early_stopping_patience": 5,
            "max_epochs": 200,
            "hidden": [64, 64],
            "embed": None,
            "beta1": 0.9,
            "beta2": 0.999,
            "epsilon": 1e-7,
        },
    },
    "explain": {
        "eval_split": "test",
        "importance": {"B": 5, "loss": "weighted_mse"},
        "pdp": {"features": ["vehicle_age"], "grid_points": 21},
        "ice": {"features": ["vehicle_age"], "grid_points": 21, "instances": 50},
        "ale": {"features": ["vehicle_age"], "n_bins": 10},
        "breakdown": {"instances": [0], "instance_rows": [], "ordering": "schema", "background_rows": 1000},
        "shap": {
            "instances": [0],
            "instance_rows": [],
            "method": "sampled",
            "M": 1000,
            "background_rows": 1000,
        },
    },
}

EXPLAINERS = ("importance", "pdp", "ice", "ale", "breakdown", "shap")


class ConfigError(LcExplainError):
    pass


def deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in out:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(cfg: dict) -> dict:
    try:
        check_seed(cfg["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad root seed: {exc}") from None
    data = cfg["data"]
    if data["source"] == "synthetic":
        if data["csv"] or data["schema"]:
            raise ConfigError("give exactly one data source: synthetic, or csv + schema")
        if int(data["n"]) < 3:
            raise ConfigError("synthetic data needs n >= 3")
    elif data["source"] == "csv":
        if not data["csv"] or not data["schema"]:
            raise ConfigError("csv data source needs both 'csv' and 'schema' paths")
    else:
        raise ConfigError(f"unknown data source {data['source']!r}")
    if cfg["model"]["type"] not in ("glm", "tree", "nn"):
        raise ConfigError(f"unknown model type {cfg['model']['type']!r}")
    if cfg["explain"]["eval_split"] not in ("test", "all", "analysis", "assessment"):
        raise ConfigError("explain.eval_split must be test, all, analysis or assessment")
    if cfg["explain"]["shap"]["method"] not in ("exact", "sampled"):
        raise ConfigError("explain.shap.method must be 'exact' or 'sampled'")
    return cfg


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        cfg = deep_merge(cfg, user)
    if overrides:
        cfg = deep_merge(cfg, overrides)
    return validate(cfg)


def dumps_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2) + "\n"
