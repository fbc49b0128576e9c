import os
import subprocess
import sys

import numpy as np
import pytest

from rgmca import _kernels


def test_numpy_kernels(rng):
    M = rng.standard_normal((6, 40))
    lam = rng.uniform(0, 1, 6)
    expected = np.sign(M) * np.maximum(np.abs(M) - lam[:, None], 0)
    assert np.allclose(_kernels.soft_threshold_rows_numpy(M, lam), expected, atol=0)
    assert np.allclose(_kernels.column_l1_numpy(M), np.abs(M).sum(axis=0))


@pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")
def test_numba_matches_numpy_bitwise(rng):
    M = rng.standard_normal((16, 1024)) * 10
    lam = rng.uniform(0, 5, 16)
    assert np.array_equal(
        _kernels.soft_threshold_rows_numba(M, lam), _kernels.soft_threshold_rows_numpy(M, lam)
    )
    assert np.allclose(_kernels.column_l1_numba(M), _kernels.column_l1_numpy(M), rtol=1e-14, atol=0)


def test_env_flag_selects_numpy():
    env = dict(os.environ, RGMCA_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import rgmca; print(rgmca.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
