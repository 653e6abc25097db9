from .export import artifact_from_dict, artifact_to_csv, artifact_to_json, export, load_artifact
from .svg import KINDS, PlotSpec, default_spec, render

__all__ = [
    "KINDS", "PlotSpec", "artifact_from_dict", "artifact_to_csv", "artifact_to_json", "default_spec",
    "export", "load_artifact", "render",
]
