"""Compare the compiled and pure-Python tree kernels.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]

Also times a full tree fit under each backend (in a subprocess, since the
backend is picked at import).
"""

import argparse
import subprocess
import sys
import timeit

import numpy as np

from lcexplain import _kernels_py

try:
    from lcexplain import _kernels as compiled
except ImportError:
    compiled = None

FIT = """
import time
from lcexplain.models import fit_tree
from lcexplain.tabular import generate_synthetic
from lcexplain.kernels import BACKEND
ds, _ = generate_synthetic({n}, 0)
t0 = time.perf_counter()
fit_tree(ds, max_depth=6, min_leaf_size=50)
print(BACKEND, time.perf_counter() - t0)
"""


def _best(stmt, repeat):
    return min(timeit.repeat(stmt, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    x = np.sort(rng.integers(0, 200, args.n).astype(float))
    y = rng.gamma(2.0, size=args.n)
    w = rng.uniform(0.2, 1.0, args.n)

    rows = [("best_split", lambda k: k.best_split(x, y, w, 20))]
    if compiled is not None:
        # a depth-6 tree to route rows through
        from lcexplain.models import fit_tree
        from lcexplain.tabular import generate_synthetic

        ds, _ = generate_synthetic(args.n, 0)
        m = fit_tree(ds, max_depth=6, min_leaf_size=50)
        Xq = np.ascontiguousarray(ds.X, dtype=np.float64)
        targs = (Xq, m.feature, m.threshold, m.cat_left, m.left, m.right)
        rows.append(("apply_tree", lambda k: k.apply_tree(*targs)))

    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<12}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, call in rows:
        tp = _best(lambda: call(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name:<12}{tp:>12.5f}{'n/a':>12}{'n/a':>10}")
            continue
        tc = _best(lambda: call(compiled), args.repeat)
        print(f"{name:<12}{tp:>12.5f}{tc:>12.5f}{tp / tc:>9.1f}x")

    for env in ({"LCEXPLAIN_PURE_PYTHON": "1"}, {}):
        out = subprocess.run([sys.executable, "-c", FIT.format(n=args.n)], env={**env, "PATH": ""},
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"fit_tree depth 6 [{out[0]}]: {float(out[1]):.3f}s")


if __name__ == "__main__":
    main()
