"""GMCA: alternating projected least squares with a decreasing soft threshold."""
import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, mad_sigma, normalize_columns, pseudo_inverse, soft_threshold
from .model import SeparationResult, SolverParams

# fraction of samples kept per source by the first threshold
TOP_FRACTION = 0.01
_EXP_RATE = 5.0
MAX_RESEEDS = 10


class DegenerateUpdate(ArithmeticError):
    """The source estimate is identically zero; the mixing matrix cannot be updated."""


@dataclass(frozen=True)
class ThresholdSchedule:
    initial: np.ndarray
    floor: float
    steps: int
    rule: str = "linear"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("a schedule needs at least one step")
        if np.any(np.asarray(self.initial) < self.floor):
            raise ValueError("initial thresholds must be >= floor")
        if self.rule not in ("linear", "exponential"):
            raise ValueError(f"unknown schedule rule {self.rule!r}")

    def value(self, j, start=None):
        """Per-source thresholds at step ``j``; the last step is exactly ``floor``.

        ``start`` replaces the stored initial thresholds as the upper end of
        the ramp, which lets callers refresh it from the current projection.
        """
        initial = np.asarray(self.initial if start is None else start, dtype=np.float64)
        if j >= self.steps - 1:
            return np.full_like(initial, self.floor)
        s = j / (self.steps - 1)
        if self.rule == "linear":
            frac = 1.0 - s
        else:
            frac = (math.exp(-_EXP_RATE * s) - math.exp(-_EXP_RATE)) / (1.0 - math.exp(-_EXP_RATE))
        return self.floor + (initial - self.floor) * frac


def estimate_noise_sigma(X):
    return mad_sigma(X)


def random_mixing(m, n, rng):
    """Gaussian ``m x n`` matrix with unit-norm columns."""
    A = rng.standard_normal((m, n))
    return A / np.sqrt(np.sum(A * A, axis=0))


def top_order_statistic(P, floor):
    """q-th largest magnitude per row, ``q = max(2, ceil(0.01 t))``, clamped at ``floor``."""
    P = np.abs(P)
    t = P.shape[1]
    q = min(t, max(2, math.ceil(TOP_FRACTION * t)))
    kth = np.partition(P, t - q, axis=1)[:, t - q]
    return np.maximum(kth, floor)


def initial_thresholds(X_eff, A_cur, floor, pinv_tol=1e-10):
    """Order-statistic start thresholds on the projection ``pinv(A_cur) @ X_eff``."""
    return top_order_statistic(pseudo_inverse(A_cur, pinv_tol) @ X_eff, floor)


def update_sources(X_eff, A_cur, thresholds, pinv_tol=1e-10):
    return soft_threshold(pseudo_inverse(A_cur, pinv_tol) @ X_eff, thresholds)


def update_mixing(X_eff, S_cur, weights=None, pinv_tol=1e-10, A_prev=None, rng=None, max_coherence=None):
    """Least-squares mixing update, optionally sample-weighted, with unit columns.

    Computes ``X_eff S_cur^+`` or ``(X_eff W)(S_cur W)^+`` for ``W = diag(weights)``.
    Columns belonging to all-zero source rows are copied from ``A_prev``;
    columns that still come out zero are redrawn as random unit vectors, as
    is any column whose absolute cosine with an earlier column exceeds
    ``max_coherence``.  Raises :class:`DegenerateUpdate` when ``S_cur`` is
    entirely zero.
    """
    if not np.any(S_cur):
        raise DegenerateUpdate("all-zero source estimate")
    if weights is None:
        A = X_eff @ pseudo_inverse(S_cur, pinv_tol)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (S_cur.shape[1],) or np.any(w <= 0):
            raise ValueError("weights must be positive with one entry per sample")
        A = (X_eff * w) @ pseudo_inverse(S_cur * w, pinv_tol)
    dead = ~np.any(S_cur, axis=1)
    if A_prev is not None and np.any(dead):
        A[:, dead] = A_prev[:, dead]
    A, zero = normalize_columns(A)
    if np.any(zero):
        rng = rng if rng is not None else np.random.default_rng()
        A[:, zero] = random_mixing(A.shape[0], int(zero.sum()), rng)
    if max_coherence is not None:
        rng = rng if rng is not None else np.random.default_rng()
        _split_collinear(A, max_coherence, rng)
    return A


def _split_collinear(A, max_coherence, rng):
    # Two estimated columns locked onto the same direction make pinv(A) blow
    # up and never separate again; reseed the later one.
    for r in range(1, A.shape[1]):
        for _ in range(MAX_RESEEDS):
            if np.max(np.abs(A[:, :r].T @ A[:, r])) <= max_coherence:
                break
            A[:, r] = random_mixing(A.shape[0], 1, rng)[:, 0]


def run_inner(X_eff, A, schedule, weights, pinv_tol, rng, trace=None, max_coherence=0.95):
    """``schedule.steps`` rounds of source update, mixing update, threshold decrease.

    At each step the upper end of the threshold ramp is refreshed from the
    current projection (see :func:`top_order_statistic`), so the thresholds
    track the scale of the current mixing estimate.  Returns
    ``(A, S, n_degenerate)``; ``trace``, when a list, receives ``(S, A)``
    copies after every step.
    """
    S = None
    degenerate = 0
    for j in range(schedule.steps):
        P = pseudo_inverse(A, pinv_tol) @ X_eff
        S = soft_threshold(P, schedule.value(j, top_order_statistic(P, schedule.floor)))
        try:
            A = update_mixing(X_eff, S, weights, pinv_tol, A_prev=A, rng=rng, max_coherence=max_coherence)
        except DegenerateUpdate:
            degenerate += 1
        if trace is not None:
            trace.append((S.copy(), A.copy()))
    return A, S, degenerate


def gmca(X, n, params=None, A_init=None, trace=None):
    """Separate ``n`` sparse sources from ``X``.

    The mixing matrix starts from a seeded random Gaussian draw unless
    ``A_init`` is given.  ``O_est`` of the result is all zero.
    """
    params = params or SolverParams()
    X = as_matrix(X, "X")
    m, t = X.shape
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    rng = np.random.default_rng(params.rng_seed)
    A = random_mixing(m, n, rng) if A_init is None else normalize_columns(as_matrix(A_init, "A_init"))[0]

    sigma = estimate_noise_sigma(X)
    floor = params.final_threshold_multiplier * sigma
    schedule = ThresholdSchedule(
        initial_thresholds(X, A, floor, params.pinv_tol), floor, params.inner_iters, params.schedule
    )
    A, S, degenerate = run_inner(X, A, schedule, None, params.pinv_tol, rng, trace, params.max_coherence)

    return SeparationResult(
        A_est=A,
        S_est=S,
        O_est=np.zeros_like(X),
        iterations_run={"outer": 1, "inner": params.inner_iters},
        residual_norm=float(np.linalg.norm(X - A @ S)),
        diagnostics={"sigma": sigma, "degenerate_updates": degenerate},
    )
