"""Principal Component Pursuit by inexact augmented Lagrangian, and PCP+GMCA."""
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .gmca import gmca
from .linalg import as_matrix, soft_threshold, svd


@dataclass(frozen=True)
class PcpParams:
    lambda_pcp: float | None = None  # None -> 1 / sqrt(max(m, t))
    tol: float = 1e-7
    max_iters: int = 500
    mu0: float | None = None  # None -> 1.25 / ||X||_2
    rho: float = 1.5
    mu_max_factor: float = 1e7

    def __post_init__(self):
        if self.lambda_pcp is not None and not self.lambda_pcp > 0:
            raise ValueError("lambda_pcp must be > 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not self.rho > 1:
            raise ValueError("rho must be > 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


class PcpResult(NamedTuple):
    L: np.ndarray
    O: np.ndarray
    converged: bool
    iterations: int
    residuals: list


def singular_value_threshold(M, tau):
    """Shrink every singular value of ``M`` by ``tau`` (clipped at zero)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    U, s, Vt = svd(M)
    shrunk = np.maximum(s - tau, 0.0)
    keep = shrunk > 0
    return (U[:, keep] * shrunk[keep]) @ Vt[keep]


def pcp(X, params=None):
    """Split ``X`` into low-rank ``L`` plus sparse ``O``.

    Minimizes ``||L||_* + lambda ||O||_1`` subject to ``L + O = X``; stops
    once ``||X - L - O||_F / ||X||_F <= tol``.
    """
    params = params or PcpParams()
    X = as_matrix(X, "X")
    m, t = X.shape
    norm_fro = np.linalg.norm(X)
    if norm_fro == 0.0:
        return PcpResult(np.zeros_like(X), np.zeros_like(X), True, 0, [0.0])

    lam = params.lambda_pcp if params.lambda_pcp is not None else 1.0 / math.sqrt(max(m, t))
    norm_two = svd(X).singular_values[0]
    mu = params.mu0 if params.mu0 is not None else 1.25 / norm_two
    mu_max = mu * params.mu_max_factor
    # dual start scaled so that its spectral and max norms are both feasible
    Y = X / max(norm_two, np.max(np.abs(X)) / lam)

    L = np.zeros_like(X)
    O = np.zeros_like(X)
    residuals = []
    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        L = singular_value_threshold(X - O + Y / mu, 1.0 / mu)
        O = soft_threshold(X - L + Y / mu, lam / mu)
        Z = X - L - O
        Y = Y + mu * Z
        mu = min(mu * params.rho, mu_max)
        residuals.append(float(np.linalg.norm(Z) / norm_fro))
        if residuals[-1] <= params.tol:
            converged = True
            break
    return PcpResult(L, O, converged, it, residuals)


def pcp_gmca(X, n, params=None, pcp_params=None):
    """Remove PCP's sparse component from ``X``, then run GMCA on the rest."""
    X = as_matrix(X, "X")
    split = pcp(X, pcp_params)
    result = gmca(split.L, n, params)
    result.O_est = split.O
    result.converged = split.converged
    result.residual_norm = float(np.linalg.norm(X - result.A_est @ result.S_est - split.O))
    result.diagnostics["pcp_iterations"] = split.iterations
    return result
