import numpy as np
import pytest

from lcexplain.models import FunctionModel
from lcexplain.tabular import Categorical, Dataset, Feature, Numeric, Schema


def numeric_schema(*names, **kw) -> Schema:
    return Schema(tuple(Feature(n, Numeric()) for n in names), **kw)


def numeric_dataset(X, y=None, names=None, w=None) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    names = names or [f"x{k}" for k in range(X.shape[1])]
    if y is None:
        y = np.zeros(X.shape[0])
    return Dataset(numeric_schema(*names), X, y, w)


def fn_model(schema, fn) -> FunctionModel:
    return FunctionModel(schema, fn)


@pytest.fixture
def ab_fixture():
    """f(a, b) = a * b with background {(0,0), (2,2)} and instance (1,1)."""
    ds = numeric_dataset([[0.0, 0.0], [2.0, 2.0]], names=["a", "b"])
    m = fn_model(ds.schema, lambda X: X[:, 0] * X[:, 1])
    return m, ds, np.array([1.0, 1.0])


@pytest.fixture
def mixed_schema():
    return Schema(
        (
            Feature("age", Numeric()),
            Feature("kind", Categorical(("car", "van", "truck"))),
            Feature("zone", Categorical(tuple("ABCDEFGHIJKL"))),
        ),
        response="loss_cost",
        weight="exposure",
    )


# -- acceptance summary --------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def record_criterion(k: int, title: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {title} ({detail})"
    ACCEPTANCE[k] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
