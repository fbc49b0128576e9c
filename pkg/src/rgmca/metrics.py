"""Mixing-matrix error with permutation and sign alignment."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import pseudo_inverse

SUCCESS_THRESHOLD = 5e-3


@dataclass(frozen=True)
class Alignment:
    """``A_est[:, permutation[j]] * signs[j]`` is matched to ``A_true[:, j]``."""

    permutation: np.ndarray
    signs: np.ndarray

    def apply(self, A_est):
        return A_est[:, self.permutation] * self.signs


def align_columns(A_est, A_true):
    A_est = np.asarray(A_est, dtype=np.float64)
    A_true = np.asarray(A_true, dtype=np.float64)
    if A_est.shape != A_true.shape or A_est.ndim != 2:
        raise ValueError(f"shape mismatch: {A_est.shape} vs {A_true.shape}")
    corr = A_est.T @ A_true
    rows, cols = linear_sum_assignment(-np.abs(corr))
    perm = np.empty(A_true.shape[1], dtype=np.int64)
    perm[cols] = rows
    signs = np.where(corr[perm, np.arange(perm.size)] < 0, -1.0, 1.0)
    return Alignment(perm, signs)


def delta_A(A_est, A_true, rank_tol=1e-10):
    """Mean absolute entry of ``pinv(aligned A_est) @ A_true - I``.

    Returns ``inf`` when the estimate is numerically rank deficient.
    """
    A_est = np.asarray(A_est, dtype=np.float64)
    A_true = np.asarray(A_true, dtype=np.float64)
    if not np.all(np.isfinite(A_est)):
        return float("inf")
    aligned = align_columns(A_est, A_true).apply(A_est)
    n = A_true.shape[1]
    s = np.linalg.svd(aligned, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= rank_tol * s[0]:
        return float("inf")
    err = pseudo_inverse(aligned) @ A_true - np.eye(n)
    return float(np.sum(np.abs(err)) / n**2)


def success(delta):
    return bool(delta < SUCCESS_THRESHOLD)
