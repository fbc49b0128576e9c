import math

import numpy as np
import pytest

from rgmca.datagen import (
    DegenerateDrawError,
    OutlierSpec,
    SourceSpec,
    gen_mixing,
    gen_noise,
    gen_outliers,
    gen_scene,
    gen_sources,
    gen_spectra_like,
    laplacian_kernel,
)


def _rng(seed):
    return np.random.default_rng(seed)


class _OneSpikeRng:
    """Stands in for a generator so that exactly one spike of height 1 sits at ``pos``."""

    def __init__(self, t, pos):
        self.t, self.pos = t, pos

    def random(self, shape):
        u = np.ones(shape)
        u[0, self.pos] = 0.0
        return u

    def standard_normal(self, shape):
        return np.ones(shape)


def test_sources_degenerate_and_dense():
    with pytest.raises(DegenerateDrawError):
        gen_sources(4, 16, SourceSpec(activation=0.0), _rng(0))
    S = gen_sources(4, 64, SourceSpec(activation=1.0, peak=100.0), _rng(0))
    assert np.all(S != 0)
    assert np.max(np.abs(S)) == 100.0


def test_sources_activation_band():
    S = gen_sources(8, 1024, SourceSpec(activation=0.05), _rng(3))
    frac = np.count_nonzero(S) / S.size
    assert 0.03 <= frac <= 0.07


def test_mixing_contract():
    assert abs(gen_mixing(1, 1, _rng(0))[0, 0]) == 1.0
    A = gen_mixing(16, 8, _rng(1))
    assert np.allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12, rtol=0)
    assert np.array_equal(A, gen_mixing(16, 8, _rng(1)))
    assert not np.array_equal(A, gen_mixing(16, 8, _rng(2)))
    with pytest.raises(ValueError):
        gen_mixing(2, 3, _rng(0))


def test_outliers_support():
    assert not np.any(gen_outliers(4, 10, OutlierSpec(0, 0, 10.0), _rng(0)))
    O = gen_outliers(4, 10, OutlierSpec(0, 2, 10.0), _rng(0))
    assert np.count_nonzero(O) == 8
    assert np.count_nonzero(np.any(O, axis=0)) == 2
    O = gen_outliers(16, 1024, OutlierSpec(160, 10, 100.0), _rng(5))
    assert np.count_nonzero(O) == 320
    full = np.all(O != 0, axis=0)
    assert full.sum() == 10
    assert np.count_nonzero(O[:, ~full]) == 160


def test_outliers_too_many():
    with pytest.raises(ValueError):
        gen_outliers(2, 3, OutlierSpec(5, 1, 1.0), _rng(0))


def test_noise():
    assert not np.any(gen_noise(3, 4, 0.0, _rng(0)))
    N = gen_noise(16, 1024, 1.0, _rng(0))
    assert 0.97 <= N.std() <= 1.03
    assert np.array_equal(N, gen_noise(16, 1024, 1.0, _rng(0)))
    with pytest.raises(ValueError):
        gen_noise(2, 2, -1.0, _rng(0))


def test_kernel_half_maximum():
    k = laplacian_kernel(2.0)
    c = k.size // 2
    assert k.sum() == pytest.approx(1.0)
    assert np.allclose(k, k[::-1])
    assert k[c + 1] / k[c] == pytest.approx(math.exp(-math.log(2)))
    with pytest.raises(ValueError):
        laplacian_kernel(0.0)


def test_single_spike_reproduces_kernel():
    t, pos = 101, 50
    S = gen_spectra_like(1, t, SourceSpec(activation=0.5, peak=1.0), 2.0, _OneSpikeRng(t, pos))
    k = laplacian_kernel(2.0)
    half = k.size // 2
    assert np.argmax(S[0]) == pos
    assert np.allclose(S[0, pos - half:pos + half + 1], k / k.max())
    assert np.allclose(S[0, pos - 5:pos], S[0, pos + 5:pos:-1])


def test_spectra_degenerate():
    with pytest.raises(DegenerateDrawError):
        gen_spectra_like(2, 64, SourceSpec(activation=0.0), 2.0, _rng(0))


def test_scene_determinism():
    args = (16, 8, 256, SourceSpec(), OutlierSpec(20, 2, 100.0), 0.1)
    a = gen_scene(*args, _rng(9))
    b = gen_scene(*args, _rng(9))
    for name in "XASON":
        assert np.array_equal(getattr(a, name), getattr(b, name))
