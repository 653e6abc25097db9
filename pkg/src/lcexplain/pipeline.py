"""End-to-end runs: data -> split -> model -> explanations -> files.

Every stage draws its seed from the root seed with
``derive_seed(root, stage, index)``; output files contain no timestamps, so
a configuration plus its root seed reproduces a bundle byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path

from .config import EXPLAINERS, ConfigError, dumps_config
from .errors import DataError, SchemaError
from .explain_global import ale, ice, pdp, permutation_importance
from .explain_local import BackgroundSet, break_down, greedy_ordering, shapley_exact, shapley_sampled
from .models import Predictor, TrainConfig, fit_glm, fit_nn, fit_tree, load_model, save_model, weighted_loss
from .report import default_spec, export, render
from .seeding import derive_seed
from .tabular import Dataset, SplitSpec, SyntheticSpec, generate_synthetic, load_schema, read_csv, split

log = logging.getLogger(__name__)


def load_data(cfg: dict):
    """The configured dataset and, for synthetic data, its ground truth."""
    data = cfg["data"]
    if data["source"] == "synthetic":
        spec = SyntheticSpec.from_dict(data["synthetic"])
        return generate_synthetic(int(data["n"]), derive_seed(cfg["seed"], "generate"), spec)
    return read_csv(data["csv"], load_schema(data["schema"])), None


def split_data(cfg: dict, ds: Dataset):
    s = cfg["split"]
    spec = SplitSpec(s["test_fraction"], s["assessment_fraction_of_remainder"], derive_seed(cfg["seed"], "split"))
    return split(ds, spec)


def evaluation_data(cfg: dict, ds: Dataset, parts) -> Dataset:
    which = cfg["explain"]["eval_split"]
    if which == "all":
        return ds
    analysis, assessment, test = parts
    return {"analysis": analysis, "assessment": assessment, "test": test}[which]


def train_model(cfg: dict, analysis: Dataset, assessment: Dataset) -> tuple[Predictor, dict]:
    mcfg = cfg["model"]
    kind = mcfg["type"]
    record: dict = {"model": kind, "n_analysis": analysis.n_rows, "n_assessment": assessment.n_rows}
    if kind == "glm":
        g = mcfg["glm"]
        model = fit_glm(analysis, g["terms"], g["link"], g["ridge"])
        record["terms"] = model.term_labels
    elif kind == "tree":
        t = mcfg["tree"]
        model = fit_tree(analysis, t["max_depth"], t["min_leaf_size"])
        record["n_nodes"] = model.n_nodes
    else:
        tc = TrainConfig(seed=derive_seed(cfg["seed"], "train"), **mcfg["nn"])
        model = fit_nn(analysis, assessment, tc)
        h = model.history
        record.update(h.to_dict())
        record["early_stopping_epoch"] = len(h.epochs) if h.stopped_early else None
    record["final_analysis_loss"] = weighted_loss(model.predict(analysis.X), analysis.y, analysis.w)
    record["final_assessment_loss"] = weighted_loss(model.predict(assessment.X), assessment.y, assessment.w)
    return model, record


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n", encoding="utf-8")
    return path


def cmd_train(cfg: dict, out: str | Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ds, _ = load_data(cfg)
    analysis, assessment, _ = split_data(cfg, ds)
    t0 = time.perf_counter()
    model, record = train_model(cfg, analysis, assessment)
    log.info("trained %s in %.1fs", cfg["model"]["type"], time.perf_counter() - t0)
    config_path = out / "config.json"
    config_path.write_text(dumps_config(cfg), encoding="utf-8")
    model_path = out / "model.json"
    save_model(model, model_path)
    return [config_path, model_path, _write_json(out / "train_log.json", record)]


def _resolve_instances(section: dict, eval_ds: Dataset) -> list[tuple[str, list[float]]]:
    """(file stem suffix, feature row) for each configured instance."""
    schema = eval_ds.schema
    out = []
    for idx in section.get("instances", []):
        idx = int(idx)
        if not 0 <= idx < eval_ds.n_rows:
            raise DataError(f"instance index {idx} outside the evaluation data ({eval_ds.n_rows} rows)")
        out.append((f"instance{idx}", [float(v) for v in eval_ds.X[idx]]))
    for k, row in enumerate(section.get("instance_rows", [])):
        missing = [n for n in schema.names if n not in row]
        if missing:
            raise DataError(f"instance row {k} lacks feature(s) {missing}")
        values = []
        for feat in schema.features:
            v = row[feat.name]
            values.append(float(feat.kind.index(v)) if feat.is_categorical else float(v))
        out.append((f"row{k}", values))
    return out


def _emit(artifact, out: Path, stem: str, spec=None) -> list[Path]:
    paths = [
        export(artifact, "json", out / f"{stem}.json"),
        export(artifact, "csv", out / f"{stem}.csv"),
    ]
    svg = out / f"{stem}.svg"
    svg.write_text(render(artifact, spec or default_spec(artifact)), encoding="utf-8")
    paths.append(svg)
    return paths


def run_explainer(which: str, cfg: dict, model: Predictor, eval_ds: Dataset, out: Path) -> list[Path]:
    if which not in EXPLAINERS:
        raise ConfigError(f"unknown explainer {which!r}; expected one of {EXPLAINERS}")
    if model.schema != eval_ds.schema:
        raise SchemaError("model schema does not match the data schema")
    e = cfg["explain"]
    root = cfg["seed"]
    written: list[Path] = []
    if which == "importance":
        p = e["importance"]
        rep = permutation_importance(model, eval_ds, p["loss"], p["B"], derive_seed(root, "importance"))
        written += _emit(rep, out, "importance")
    elif which in ("pdp", "ice", "ale"):
        p = e[which]
        for name in p["features"]:
            j = eval_ds.schema.index(name)
            if which == "pdp":
                art = pdp(model, eval_ds, j, p["grid_points"])
            elif which == "ice":
                art = ice(model, eval_ds, j, p["grid_points"], p["instances"], derive_seed(root, "ice"))
            else:
                art = ale(model, eval_ds, j, p["n_bins"])
            written += _emit(art, out, f"{which}_{name}")
    else:
        p = e[which]
        bg = BackgroundSet(eval_ds, p["background_rows"], derive_seed(root, "background"))
        for k, (stem, x) in enumerate(_resolve_instances(p, eval_ds)):
            if which == "breakdown":
                ordering = p["ordering"]
                if ordering == "schema":
                    ordering = None
                elif ordering == "greedy":
                    ordering = greedy_ordering(model, bg, x)
                art = break_down(model, bg, x, ordering)
                written += _emit(art, out, f"waterfall_{stem}")
            else:
                if p["method"] == "exact":
                    art = shapley_exact(model, bg, x)
                else:
                    art = shapley_sampled(model, bg, x, p["M"], derive_seed(root, "shap", k))
                written += _emit(art, out, f"shap_{stem}")
    return written


def cmd_explain(cfg: dict, model_path: str | Path, which: str, out: str | Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(model_path)
    ds, _ = load_data(cfg)
    parts = None if cfg["explain"]["eval_split"] == "all" else split_data(cfg, ds)
    eval_ds = evaluation_data(cfg, ds, parts)
    (out / "config.json").write_text(dumps_config(cfg), encoding="utf-8")
    return run_explainer(which, cfg, model, eval_ds, out)


def cmd_casestudy(cfg: dict, out: str | Path) -> dict:
    """Generate, split, train, run every explainer and render; returns the manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(dumps_config(cfg), encoding="utf-8")
    t0 = time.perf_counter()
    ds, truth = load_data(cfg)
    parts = split_data(cfg, ds)
    analysis, assessment, _ = parts
    model, record = train_model(cfg, analysis, assessment)
    save_model(model, out / "model.json")
    _write_json(out / "train_log.json", record)
    log.info("data and training done in %.1fs", time.perf_counter() - t0)
    if truth is not None:
        _write_json(out / "ground_truth.json", {"null_features": truth.null_features(), "spec": truth.spec.to_dict()})

    eval_ds = evaluation_data(cfg, ds, parts)
    for which in EXPLAINERS:
        t1 = time.perf_counter()
        run_explainer(which, cfg, model, eval_ds, out)
        log.info("%s done in %.1fs", which, time.perf_counter() - t1)

    files = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    manifest = {
        "files": {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in files},
    }
    _write_json(out / "manifest.json", manifest)
    return manifest
