"""Seeded synthetic sources, mixing matrices, outliers and noise."""
import math
from dataclasses import dataclass

import numpy as np

from .model import assemble_scene

MAX_REDRAWS = 10


@dataclass(frozen=True)
class SourceSpec:
    activation: float = 0.05
    peak: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.activation <= 1.0:
            raise ValueError(f"activation must lie in [0, 1], got {self.activation}")
        if not self.peak > 0:
            raise ValueError(f"peak must be > 0, got {self.peak}")


@dataclass(frozen=True)
class OutlierSpec:
    n_scattered: int = 0
    n_corrupted_columns: int = 0
    amplitude_std: float = 0.0

    def __post_init__(self):
        if self.n_scattered < 0 or self.n_corrupted_columns < 0:
            raise ValueError("outlier counts must be non-negative")
        if self.amplitude_std < 0:
            raise ValueError("amplitude_std must be non-negative")

    def check(self, m, t):
        if self.n_corrupted_columns > t or self.n_scattered + m * self.n_corrupted_columns > m * t:
            raise ValueError(
                f"{self.n_scattered} scattered entries and {self.n_corrupted_columns} full columns "
                f"do not fit in a {m}x{t} matrix"
            )


class DegenerateDrawError(RuntimeError):
    """A generator kept producing an all-zero matrix."""


def _bernoulli_gaussian(n, t, activation, rng):
    mask = rng.random((n, t)) < activation
    return np.where(mask, rng.standard_normal((n, t)), 0.0)


def _rescale(M, peak):
    # divide first so the largest entry maps to exactly +-peak
    return (M / np.max(np.abs(M))) * peak


def gen_sources(n, t, spec, rng):
    """Bernoulli-Gaussian ``n x t`` sources whose largest magnitude equals ``spec.peak``."""
    if n < 1 or t < 1:
        raise ValueError("n and t must be >= 1")
    for _ in range(MAX_REDRAWS):
        S = _bernoulli_gaussian(n, t, spec.activation, rng)
        if np.any(S):
            return _rescale(S, spec.peak)
    raise DegenerateDrawError(f"all-zero sources after {MAX_REDRAWS} draws (activation={spec.activation})")


def gen_mixing(m, n, rng):
    if not m >= n >= 1:
        raise ValueError(f"need m >= n >= 1, got m={m}, n={n}")
    for _ in range(MAX_REDRAWS):
        A = rng.standard_normal((m, n))
        A /= np.sqrt(np.sum(A * A, axis=0))
        if np.linalg.matrix_rank(A) == n:
            return A
    raise DegenerateDrawError(f"rank-deficient {m}x{n} mixing matrix after {MAX_REDRAWS} draws")


def gen_outliers(m, t, spec, rng):
    """Fully corrupted columns plus scattered entries on a disjoint support."""
    spec.check(m, t)
    O = np.zeros((m, t))
    cols = np.sort(rng.choice(t, size=spec.n_corrupted_columns, replace=False))
    O[:, cols] = spec.amplitude_std * rng.standard_normal((m, cols.size))
    if spec.n_scattered:
        free = np.ones((m, t), dtype=bool)
        free[:, cols] = False
        candidates = np.flatnonzero(free)
        picked = rng.choice(candidates, size=spec.n_scattered, replace=False)
        O.flat[picked] = spec.amplitude_std * rng.standard_normal(spec.n_scattered)
    return O


def gen_noise(m, t, sigma, rng):
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return sigma * rng.standard_normal((m, t))


def laplacian_kernel(fwhm, cutoff=1e-6):
    """Two-sided exponential ``exp(-|k| 2 ln2 / fwhm)``, truncated and l1-normalized."""
    if not fwhm > 0:
        raise ValueError("kernel_fwhm must be > 0")
    rate = 2.0 * math.log(2.0) / fwhm
    half = int(math.floor(-math.log(cutoff) / rate))
    k = np.arange(-half, half + 1)
    w = np.exp(-np.abs(k) * rate)
    return w / w.sum()


def gen_spectra_like(n, t, spec, kernel_fwhm, rng):
    """Spike trains blurred by a Laplacian line shape, rescaled to ``spec.peak``."""
    if n < 1 or t < 1:
        raise ValueError("n and t must be >= 1")
    kernel = laplacian_kernel(kernel_fwhm)
    for _ in range(MAX_REDRAWS):
        spikes = _bernoulli_gaussian(n, t, spec.activation, rng)
        if np.any(spikes):
            break
    else:
        raise DegenerateDrawError(f"all-zero spike trains after {MAX_REDRAWS} draws")
    half = kernel.size // 2
    S = np.stack([np.convolve(row, kernel)[half:half + t] for row in spikes])
    return _rescale(S, spec.peak)


def gen_scene(m, n, t, source_spec, outlier_spec, sigma, rng, kernel_fwhm=None):
    """Draw ``A``, ``S``, ``O``, ``N`` in that order and assemble them.

    With ``kernel_fwhm`` set, sources come from :func:`gen_spectra_like`.
    """
    A = gen_mixing(m, n, rng)
    if kernel_fwhm is None:
        S = gen_sources(n, t, source_spec, rng)
    else:
        S = gen_spectra_like(n, t, source_spec, kernel_fwhm, rng)
    O = gen_outliers(m, t, outlier_spec, rng)
    N = gen_noise(m, t, sigma, rng)
    return assemble_scene(A, S, O, N, sigma)
