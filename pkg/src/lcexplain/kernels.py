"""Kernel selection.

Uses the compiled extension when it is importable, otherwise the pure-Python
fallback. Set ``LCEXPLAIN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("LCEXPLAIN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

best_split = _impl.best_split
apply_tree = _impl.apply_tree

__all__ = ["BACKEND", "best_split", "apply_tree"]
