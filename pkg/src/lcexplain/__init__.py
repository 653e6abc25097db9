"""Model-agnostic explanations for tabular loss-cost models."""

__version__ = "0.1.0"

from .explain_global import CurveSet, ImportanceReport, ale, ice, pdp, permutation_importance
from .explain_local import AttributionSet, BackgroundSet, break_down, shapley_exact, shapley_sampled
from .tabular import (
    Categorical,
    Dataset,
    Feature,
    Numeric,
    Schema,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    permute_column,
    read_csv,
    split,
    write_csv,
)

__all__ = [
    "AttributionSet", "BackgroundSet", "Categorical", "CurveSet", "Dataset", "Feature", "ImportanceReport",
    "Numeric", "Schema", "SplitSpec", "SyntheticSpec", "ale", "break_down", "generate_synthetic", "ice", "pdp",
    "permutation_importance", "permute_column", "read_csv", "shapley_exact", "shapley_sampled", "split",
    "write_csv",
]
