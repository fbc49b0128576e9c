"""Outlier-aware GMCA variants: NrGMCA and the reweighted rGMCA."""
from dataclasses import dataclass

import numpy as np

from .gmca import (
    ThresholdSchedule,
    estimate_noise_sigma,
    initial_thresholds,
    random_mixing,
    run_inner,
    update_sources,
)
from .linalg import as_matrix, column_l1_norms, normalize_columns, soft_threshold
from .model import SeparationResult, SolverParams

EPS_FALLBACK_SCALE = 1e-6


@dataclass(frozen=True)
class WeightVector:
    """Diagonal of the sample-weighting matrix, ``w_i = 1 / (eps + ||O[:, i]||_1)``."""

    w: np.ndarray
    eps: float


def init_outliers(X, sigma, multiplier=3.0):
    """First outlier estimate: soft-threshold ``X`` at the median of its large entries.

    The level is ``median(|X_ij| for |X_ij| > multiplier * sigma)``.  When no
    entry clears that bar the outliers are zero and the level is
    ``multiplier * sigma``.  Returns ``(O0, alpha0)``.
    """
    X = np.asarray(X, dtype=np.float64)
    mag = np.abs(X)
    big = mag[mag > multiplier * sigma]
    if big.size == 0:
        return np.zeros_like(X), multiplier * sigma
    alpha0 = float(np.median(big))
    return soft_threshold(X, alpha0), alpha0


def compute_eps(S_est):
    """A tenth of the median magnitude of the non-zero source coefficients."""
    S_est = np.asarray(S_est, dtype=np.float64)
    nz = np.abs(S_est[S_est != 0])
    if nz.size == 0:
        return EPS_FALLBACK_SCALE * (1.0 + float(np.max(np.abs(S_est), initial=0.0)))
    return float(np.median(nz)) / 10.0


def compute_weights(O_est, eps):
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return WeightVector(1.0 / (eps + column_l1_norms(O_est)), float(eps))


def update_outliers(X, A_est, S_est, alpha):
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return soft_threshold(X - A_est @ S_est, alpha)


def alpha_schedule(alpha0, floor, k, K, previous):
    """Level used at outer step ``k``: linear from ``alpha0`` to ``floor``, never increasing."""
    if k >= K - 1:
        return floor
    value = alpha0 + (floor - alpha0) * (k + 1) / K
    return max(floor, min(value, previous))


def _robust_solve(X, n, params, reweight, estimate_outliers=True, A_init=None, trace=None):
    params = params or SolverParams()
    X = as_matrix(X, "X")
    m, t = X.shape
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    mult = params.final_threshold_multiplier
    rng = np.random.default_rng(params.rng_seed)
    A = random_mixing(m, n, rng) if A_init is None else normalize_columns(as_matrix(A_init, "A_init"))[0]

    sigma = estimate_noise_sigma(X)
    if estimate_outliers:
        O, alpha0 = init_outliers(X, sigma, mult)
    else:
        O, alpha0 = np.zeros_like(X), mult * sigma
    lam0 = initial_thresholds(X - O, A, mult * sigma, params.pinv_tol)

    eps_fallbacks = 0
    weights = None
    if reweight:
        S0 = update_sources(X - O, A, lam0, params.pinv_tol)
        eps_fallbacks += not np.any(S0)
        weights = compute_weights(O, compute_eps(S0))

    history = {"alpha": [], "sigma": [], "weights": []}
    alpha = alpha0
    degenerate = 0
    S = None
    for k in range(params.outer_iters):
        X_eff = X - O
        sigma = estimate_noise_sigma(X_eff)
        floor = mult * sigma
        schedule = ThresholdSchedule(np.maximum(lam0, floor), floor, params.inner_iters, params.schedule)
        inner_trace = [] if trace is not None else None
        A, S, deg = run_inner(
            X_eff, A, schedule, None if weights is None else weights.w,
            params.pinv_tol, rng, inner_trace, params.max_coherence,
        )
        degenerate += deg
        alpha = alpha_schedule(alpha0, floor, k, params.outer_iters, alpha)
        if estimate_outliers:
            O = update_outliers(X, A, S, alpha)
        if reweight:
            eps_fallbacks += not np.any(S)
            weights = compute_weights(O, compute_eps(S))
        history["alpha"].append(alpha)
        history["sigma"].append(sigma)
        history["weights"].append(None if weights is None else weights.w.copy())
        if trace is not None:
            trace.append({"inner": inner_trace, "O": O.copy(), "weights": history["weights"][-1]})

    return SeparationResult(
        A_est=A,
        S_est=S,
        O_est=O,
        iterations_run={"outer": params.outer_iters, "inner": params.inner_iters},
        residual_norm=float(np.linalg.norm(X - A @ S - O)),
        diagnostics={
            "sigma": sigma,
            "alpha0": alpha0,
            "degenerate_updates": degenerate,
            "eps_fallbacks": eps_fallbacks,
            "history": history,
        },
    )


def nrgmca(X, n, params=None, A_init=None, trace=None):
    """GMCA with an l1-penalized outlier term and uniform sample weights."""
    return _robust_solve(X, n, params, reweight=False, A_init=A_init, trace=trace)


def rgmca(X, n, params=None, A_init=None, trace=None):
    """Robust GMCA: outlier estimation plus sample reweighting of the mixing update.

    Alternates a full GMCA pass on ``X - O`` (weighted by the current
    ``W``), an outlier update on the residual at a decreasing level, and a
    weight refresh from the new outlier columns.
    """
    return _robust_solve(X, n, params, reweight=True, A_init=A_init, trace=trace)
