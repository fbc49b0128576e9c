"""Elementwise hot loops, compiled with numba when available.

Set ``RGMCA_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
Both paths return bitwise-identical soft-threshold results; column sums may
differ in the last ulp because of summation order.
"""
import os

import numpy as np

_DISABLED = os.environ.get("RGMCA_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by RGMCA_DISABLE_NUMBA")
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False


def soft_threshold_rows_numpy(M, thresholds):
    lam = thresholds[:, None]
    return np.sign(M) * np.maximum(np.abs(M) - lam, 0.0)


def column_l1_numpy(M):
    return np.abs(M).sum(axis=0)


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def soft_threshold_rows_numba(M, thresholds):
        rows, cols = M.shape
        out = np.zeros((rows, cols))
        for i in range(rows):
            lam = thresholds[i]
            for j in range(cols):
                x = M[i, j]
                if x > lam:
                    out[i, j] = x - lam
                elif x < -lam:
                    out[i, j] = x + lam
        return out

    @njit(cache=True)
    def column_l1_numba(M):
        rows, cols = M.shape
        out = np.zeros(cols)
        for i in range(rows):
            for j in range(cols):
                out[j] += abs(M[i, j])
        return out

    soft_threshold_rows = soft_threshold_rows_numba
    column_l1 = column_l1_numba
    BACKEND = "numba"
else:
    soft_threshold_rows_numba = None
    column_l1_numba = None
    soft_threshold_rows = soft_threshold_rows_numpy
    column_l1 = column_l1_numpy
    BACKEND = "numpy"
