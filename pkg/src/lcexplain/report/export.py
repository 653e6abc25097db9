"""JSON and CSV export of explanation artifacts.

JSON files carry the full artifact plus ``format``/``version`` keys and read
back into equal objects (floats are written in shortest round-trip form).

CSV column schemas, version 1:

importance
    ``feature, baseline_loss, permuted_loss, vi, rep_1 .. rep_B``
    (``rep_b`` is the permuted loss of repetition ``b``)
pdp / ale curves
    ``feature, grid, grid_label, value``; one row per grid point
ice curves
    ``feature, instance, grid, grid_label, value``; one row per (instance, grid point)
attribution
    ``feature, feature_value, contribution, cumulative, std_error``; the first
    row is ``intercept`` (contribution = cumulative = average prediction),
    then one row per feature in reported order
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..errors import SchemaError
from ..explain_global import CurveSet, ImportanceReport
from ..explain_local import AttributionSet

FORMAT = "lcexplain-artifact"
VERSION = 1
_TYPES = {"importance": ImportanceReport, "curves": CurveSet, "attribution": AttributionSet}


def artifact_to_json(artifact) -> str:
    d = {"format": FORMAT, "version": VERSION, **artifact.to_dict()}
    return json.dumps(d, indent=1, allow_nan=False) + "\n"


def artifact_from_dict(d: dict):
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise SchemaError("not a version-1 lcexplain artifact")
    try:
        cls = _TYPES[d["type"]]
    except KeyError:
        raise SchemaError(f"unknown artifact type {d.get('type')!r}") from None
    return cls.from_dict(d)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def artifact_to_csv(artifact) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(artifact, ImportanceReport):
        w.writerow(["feature", "baseline_loss", "permuted_loss", "vi"] + [f"rep_{b + 1}" for b in range(artifact.B)])
        for e in artifact.entries:
            w.writerow([e.name, _fmt(artifact.baseline_loss), _fmt(e.permuted_loss), _fmt(e.vi)]
                       + [_fmt(r) for r in e.repetitions])
    elif isinstance(artifact, CurveSet):
        labels = artifact.grid_labels or [None] * len(artifact.grid)
        if artifact.kind == "ice":
            w.writerow(["feature", "instance", "grid", "grid_label", "value"])
            for inst, curve in zip(artifact.instances, artifact.values):
                for z, lab, v in zip(artifact.grid, labels, curve):
                    w.writerow([artifact.feature, inst, _fmt(z), _fmt(lab), _fmt(v)])
        else:
            w.writerow(["feature", "grid", "grid_label", "value"])
            for z, lab, v in zip(artifact.grid, labels, artifact.values):
                w.writerow([artifact.feature, _fmt(z), _fmt(lab), _fmt(v)])
    elif isinstance(artifact, AttributionSet):
        w.writerow(["feature", "feature_value", "contribution", "cumulative", "std_error"])
        w.writerow(["intercept", "", _fmt(artifact.intercept), _fmt(artifact.intercept), ""])
        labels = artifact.instance_labels or [""] * len(artifact.contributions)
        se = artifact.std_errors or [None] * len(artifact.contributions)
        for (name, v), lab, err, cum in zip(artifact.contributions, labels, se, artifact.cumulative()):
            w.writerow([name, lab, _fmt(v), _fmt(cum), _fmt(err)])
    else:
        raise TypeError(f"cannot export {type(artifact).__name__}")
    return buf.getvalue()


def export(artifact, fmt: str, path: str | Path) -> Path:
    path = Path(path)
    if fmt == "json":
        text = artifact_to_json(artifact)
    elif fmt == "csv":
        text = artifact_to_csv(artifact)
    else:
        raise ValueError(f"unknown export format {fmt!r}; expected 'json' or 'csv'")
    path.write_text(text, encoding="utf-8")
    return path


def load_artifact(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        return artifact_from_dict(json.load(fh))
