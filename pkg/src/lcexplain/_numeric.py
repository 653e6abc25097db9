import math

import numpy as np


def stable_mean(values) -> float:
    """Mean that returns ``v`` exactly when every value equals ``v``.

    Explainers rely on this so that a feature the model ignores gets an
    attribution or importance of exactly zero rather than a rounding residue.
    """
    a = np.asarray(values, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise ValueError("mean of empty sequence")
    first = a[0]
    if np.all(a == first):
        return float(first)
    return math.fsum(a.tolist()) / a.size
