"""Problem and result containers for X = A S + O + N."""
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_matrix

UNIT_NORM_TOL = 1e-12


def _frozen(M):
    M = np.array(M, dtype=np.float64, copy=True)
    M.setflags(write=False)
    return M


@dataclass(frozen=True)
class MixingScene:
    """Ground truth ``(A, S, O, N)`` together with the assembled observations ``X``."""

    X: np.ndarray
    A: np.ndarray
    S: np.ndarray
    O: np.ndarray
    N: np.ndarray
    sigma: float

    @property
    def shape(self):
        """``(m, n, t)``."""
        return self.A.shape[0], self.A.shape[1], self.X.shape[1]


@dataclass(frozen=True)
class SolverParams:
    outer_iters: int = 20
    inner_iters: int = 100
    final_threshold_multiplier: float = 3.0
    rng_seed: int = 0
    pinv_tol: float = 1e-10
    schedule: str = "linear"
    max_coherence: float = 0.95

    def __post_init__(self):
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("outer_iters and inner_iters must be >= 1")
        if not self.final_threshold_multiplier > 0:
            raise ValueError("final_threshold_multiplier must be > 0")
        if not 0.0 < self.pinv_tol < 1.0:
            raise ValueError("pinv_tol must lie in (0, 1)")
        if not 0.0 < self.max_coherence <= 1.0:
            raise ValueError("max_coherence must lie in (0, 1]")
        if self.schedule not in ("linear", "exponential"):
            raise ValueError(f"unknown threshold schedule {self.schedule!r}")


@dataclass
class SeparationResult:
    A_est: np.ndarray
    S_est: np.ndarray
    O_est: np.ndarray
    iterations_run: dict
    residual_norm: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def assemble_scene(A, S, O, N, sigma):
    """Build a :class:`MixingScene`, computing ``X = A @ S + O + N``."""
    A = as_matrix(A, "A")
    S = as_matrix(S, "S")
    O = as_matrix(O, "O")
    N = as_matrix(N, "N")
    m, n = A.shape
    if S.shape[0] != n:
        raise ValueError(f"A is {m}x{n} but S has {S.shape[0]} rows")
    t = S.shape[1]
    if O.shape != (m, t) or N.shape != (m, t):
        raise ValueError(f"O and N must be {m}x{t}, got {O.shape} and {N.shape}")
    norms = np.sqrt(np.sum(A * A, axis=0))
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise ValueError("columns of A must have unit l2 norm")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    X = A @ S + O + N
    return MixingScene(_frozen(X), _frozen(A), _frozen(S), _frozen(O), _frozen(N), float(sigma))


# On-disk layout: one ``<name>.bin`` per matrix holding two little-endian
# uint64 (rows, cols) followed by row-major little-endian float64 entries,
# plus ``scene.json`` for scalars.
_HEADER = struct.Struct("<QQ")
_MATRICES = ("X", "A", "S", "O", "N")


def write_matrix(path, M):
    M = np.ascontiguousarray(M, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*M.shape))
        fh.write(M.tobytes(order="C"))


def read_matrix(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    rows, cols = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ValueError(f"{path}: expected {rows}x{cols} float64 entries, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)


def save_scene(scene, directory, **meta):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in _MATRICES:
        write_matrix(directory / f"{name}.bin", getattr(scene, name))
    info = {"sigma": scene.sigma, "m": scene.shape[0], "n": scene.shape[1], "t": scene.shape[2]}
    info.update(meta)
    (directory / "scene.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def load_scene(directory):
    """Read a scene written by :func:`save_scene`; ``X`` is taken as stored."""
    directory = Path(directory)
    info = json.loads((directory / "scene.json").read_text())
    mats = {name: read_matrix(directory / f"{name}.bin") for name in _MATRICES}
    return MixingScene(**{k: _frozen(v) for k, v in mats.items()}, sigma=float(info["sigma"]))
