"""Dense linear-algebra primitives and robust statistics shared by the solvers."""
from typing import NamedTuple

import numpy as np

from . import _kernels

# 1 / Phi^{-1}(3/4): makes the MAD a consistent estimator of a Gaussian std.
MAD_TO_SIGMA = 1.4826


class SvdFactors(NamedTuple):
    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray


class SvdConvergenceError(ArithmeticError):
    """Raised when LAPACK fails to converge on an SVD."""


def as_matrix(M, name="M"):
    """Return ``M`` as a finite 2-D float64 array, raising ValueError otherwise."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def svd(M):
    """Thin SVD with singular values sorted in non-increasing order."""
    M = np.asarray(M, dtype=np.float64)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge on a {M.shape[0]}x{M.shape[1]} matrix "
            f"(max |entry| = {np.max(np.abs(M)):.3e}): {exc}"
        ) from exc
    return SvdFactors(U, s, Vt)


def soft_threshold(M, thresholds):
    """Entrywise ``sign(x) * max(0, |x| - thresholds[row])``.

    ``thresholds`` is either a scalar (applied to every entry) or one
    non-negative value per row of ``M``.
    """
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"soft_threshold expects a 2-D matrix, got shape {M.shape}")
    lam = np.asarray(thresholds, dtype=np.float64)
    if lam.ndim == 0:
        lam = np.full(M.shape[0], float(lam))
    if lam.shape != (M.shape[0],):
        raise ValueError(
            f"need one threshold per row: {M.shape[0]} rows, got thresholds of shape {lam.shape}"
        )
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("thresholds must be finite and non-negative")
    return _kernels.soft_threshold_rows(M, np.ascontiguousarray(lam))


def pseudo_inverse(M, rel_tol=1e-10):
    """Moore-Penrose pseudo-inverse through a truncated SVD.

    Singular values below ``rel_tol * s_max`` are treated as zero, so a
    matrix with an all-zero row or column still gets a well-defined inverse.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    M = np.asarray(M, dtype=np.float64)
    U, s, Vt = svd(M)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    keep = s > rel_tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vt.T * inv_s) @ U.T


def mad_sigma(values):
    """Gaussian-consistent median absolute deviation of ``values`` (flattened)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("mad_sigma needs at least one value")
    med = np.median(v)
    return MAD_TO_SIGMA * float(np.median(np.abs(v - med)))


def column_l1_norms(M):
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"column_l1_norms expects a 2-D matrix, got shape {M.shape}")
    return _kernels.column_l1(M)


def normalize_columns(M):
    """Divide each column by its l2 norm; zero columns are left at zero."""
    norms = np.sqrt(np.sum(M * M, axis=0))
    out = M.copy()
    nz = norms > 0
    out[:, nz] /= norms[nz]
    return out, ~nz
