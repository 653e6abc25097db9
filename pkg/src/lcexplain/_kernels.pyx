# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport isnan

cnp.import_array()


def best_split(const double[::1] x, const double[::1] y, const double[::1] w, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double sw = 0.0, swy = 0.0, lw = 0.0, lwy = 0.0, rw, rwy, gain, parent
    cdef double best_gain = 0.0
    cdef Py_ssize_t best_pos = -1
    for i in range(n):
        sw += w[i]
        swy += w[i] * y[i]
    parent = swy * swy / sw
    for i in range(n - 1):
        lw += w[i]
        lwy += w[i] * y[i]
        if i + 1 < min_leaf or n - i - 1 < min_leaf:
            continue
        if x[i] == x[i + 1]:
            continue
        rw = sw - lw
        rwy = swy - lwy
        gain = lwy * lwy / lw + rwy * rwy / rw - parent
        if gain > best_gain:
            best_gain = gain
            best_pos = i + 1
    return best_gain, best_pos


def apply_tree(X, const cnp.int64_t[::1] feature, const double[::1] threshold,
               const cnp.uint8_t[:, ::1] cat_left, const cnp.int64_t[::1] left,
               const cnp.int64_t[::1] right):
    cdef const double[:, :] Xv = np.asarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] node_out = out
    cdef Py_ssize_t i
    cdef cnp.int64_t k, f
    cdef double v, thr
    for i in range(n):
        k = 0
        while feature[k] >= 0:
            f = feature[k]
            v = Xv[i, f]
            thr = threshold[k]
            if isnan(thr):
                if cat_left[k, <Py_ssize_t>v]:
                    k = left[k]
                else:
                    k = right[k]
            elif v <= thr:
                k = left[k]
            else:
                k = right[k]
        node_out[i] = k
    return out
