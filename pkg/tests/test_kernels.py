import importlib
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcexplain import _kernels_py, kernels

try:
    from lcexplain import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _brute_force_split(x, y, w, min_leaf):
    # independent oracle: weighted SSE of parent minus children, every admissible cut
    def sse(idx):
        ww, yy = w[idx], y[idx]
        m = np.dot(ww, yy) / ww.sum()
        return np.dot(ww, (yy - m) ** 2)

    n = len(x)
    allrows = np.arange(n)
    best = (0.0, -1)
    for pos in range(min_leaf, n - min_leaf + 1):
        if x[pos - 1] == x[pos]:
            continue
        gain = sse(allrows) - sse(allrows[:pos]) - sse(allrows[pos:])
        if gain > best[0] + 1e-9:
            best = (gain, pos)
    return best


def _sorted_case(seed, n, distinct):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.integers(0, distinct, n).astype(float))
    y = rng.gamma(2.0, size=n) + 3 * (x > distinct / 2)
    w = rng.uniform(0.1, 2.0, n)
    return x, y, w


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 40), st.integers(1, 10), st.integers(1, 4))
def test_best_split_matches_brute_force(seed, n, distinct, min_leaf):
    x, y, w = _sorted_case(seed, n, distinct)
    gain, pos = _kernels_py.best_split(x, y, w, min_leaf)
    o_gain, o_pos = _brute_force_split(x, y, w, min_leaf)
    if o_pos < 0:
        assert pos < 0 or gain < 1e-9
    else:
        assert gain == pytest.approx(o_gain, rel=1e-9, abs=1e-9)


@needs_ext
@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 60), st.integers(1, 12), st.integers(1, 5))
def test_best_split_backends_bitwise_equal(seed, n, distinct, min_leaf):
    x, y, w = _sorted_case(seed, n, distinct)
    assert compiled.best_split(x, y, w, min_leaf) == _kernels_py.best_split(x, y, w, min_leaf)


@needs_ext
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 4))
def test_apply_tree_backends_equal(seed, depth):
    from lcexplain.models import fit_tree
    from lcexplain.tabular import Categorical, Dataset, Feature, Numeric, Schema

    rng = np.random.default_rng(seed)
    n = 80
    schema = Schema((Feature("x", Numeric()), Feature("c", Categorical(tuple("abcde")))))
    X = np.c_[rng.normal(size=n), rng.integers(0, 5, n)]
    m = fit_tree(Dataset(schema, X, rng.gamma(2.0, size=n) + X[:, 1]), max_depth=depth, min_leaf_size=3)
    Xq = np.ascontiguousarray(np.c_[rng.normal(size=50), rng.integers(0, 5, 50)], dtype=np.float64)
    args = (Xq, m.feature, m.threshold, m.cat_left, m.left, m.right)
    np.testing.assert_array_equal(compiled.apply_tree(*args), _kernels_py.apply_tree(*args))


def test_backend_flag_forces_fallback():
    code = "import lcexplain.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"LCEXPLAIN_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_reports_compiled_when_available():
    importlib.reload(kernels)
    assert kernels.BACKEND == ("cython" if compiled is not None else "python")
