"""Versioned JSON model files.

Floats are written with Python's shortest round-trip ``repr``, so every
float64 weight reads back bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import SchemaError
from ..tabular import Schema
from .base import Predictor
from .glm import GlmModel
from .nn import NnModel
from .tree import TreeModel

FORMAT = "lcexplain-model"
VERSION = 1
_KINDS = {"glm": GlmModel, "tree": TreeModel, "nn": NnModel}


def model_to_dict(model: Predictor) -> dict:
    if model.kind not in _KINDS:
        raise TypeError(f"cannot serialise model of kind {model.kind!r}")
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "schema": model.schema.to_dict(),
        "model": model.to_dict(),
    }


def model_from_dict(d: dict) -> Predictor:
    if d.get("format") != FORMAT:
        raise SchemaError("not an lcexplain model file")
    if d.get("version") != VERSION:
        raise SchemaError(f"unsupported model file version {d.get('version')!r}")
    try:
        cls = _KINDS[d["kind"]]
    except KeyError:
        raise SchemaError(f"unknown model kind {d.get('kind')!r}") from None
    return cls.from_dict(Schema.from_dict(d["schema"]), d["model"])


def dumps_model(model: Predictor) -> str:
    return json.dumps(model_to_dict(model), indent=1, allow_nan=False) + "\n"


def save_model(model: Predictor, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path) -> Predictor:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
