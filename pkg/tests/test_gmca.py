import numpy as np
import pytest

from rgmca.datagen import OutlierSpec, SourceSpec, gen_scene
from rgmca.gmca import (
    DegenerateUpdate,
    ThresholdSchedule,
    estimate_noise_sigma,
    gmca,
    initial_thresholds,
    top_order_statistic,
    update_mixing,
    update_sources,
)
from rgmca.metrics import delta_A, success
from rgmca.model import SolverParams


def _clean_scene(seed, t=1024):
    return gen_scene(16, 8, t, SourceSpec(), OutlierSpec(), 0.0, np.random.default_rng(seed))


def test_noise_sigma(rng):
    assert estimate_noise_sigma(0.1 * rng.standard_normal((16, 1024))) == pytest.approx(0.1, rel=0.05)
    assert estimate_noise_sigma(np.full((3, 3), 2.0)) == 0.0
    assert estimate_noise_sigma(_clean_scene(0).X) < 1e-3


def test_update_sources(rng):
    X = rng.standard_normal((3, 7))
    assert np.allclose(update_sources(X, np.eye(3), np.zeros(3)), X)
    out = update_sources(np.array([[5.0, 0.5], [0.0, 0.0]]), np.eye(2), [1.0, 1.0])
    assert np.allclose(out[0], [4.0, 0.0])
    A = rng.standard_normal((6, 3))
    S = rng.standard_normal((3, 20))
    assert np.allclose(update_sources(A @ S, A, np.zeros(3)), S, atol=1e-8)


def test_update_mixing_examples(rng):
    X = rng.standard_normal((5, 3))
    assert np.allclose(update_mixing(X, np.eye(3)), X / np.linalg.norm(X, axis=0))
    S = rng.standard_normal((3, 40)) * (rng.random((3, 40)) < 0.3)
    X = rng.standard_normal((5, 40))
    assert np.allclose(update_mixing(X, S, np.full(40, 7.0)), update_mixing(X, S), atol=1e-10)


def test_update_mixing_recovers_truth(rng):
    A = rng.standard_normal((8, 4))
    A /= np.linalg.norm(A, axis=0)
    S = rng.standard_normal((4, 200)) * (rng.random((4, 200)) < 0.2)
    est = update_mixing(A @ S, S)
    assert np.allclose(np.abs(np.sum(est * A, axis=0)), 1.0, atol=1e-8)


def test_update_mixing_degenerate(rng):
    with pytest.raises(DegenerateUpdate):
        update_mixing(rng.standard_normal((3, 5)), np.zeros((2, 5)))
    with pytest.raises(ValueError):
        update_mixing(rng.standard_normal((3, 5)), np.ones((2, 5)), weights=np.zeros(5))


def test_update_mixing_dead_row_keeps_previous(rng):
    S = np.zeros((2, 30))
    S[0] = rng.standard_normal(30)
    A_prev = np.linalg.qr(rng.standard_normal((4, 2)))[0]
    out = update_mixing(rng.standard_normal((4, 30)), S, A_prev=A_prev)
    assert np.allclose(out[:, 1], A_prev[:, 1])
    assert np.allclose(np.linalg.norm(out, axis=0), 1.0)


def test_collinear_columns_are_split(rng):
    X = rng.standard_normal((6, 50))
    S = np.vstack([np.ones(50), np.ones(50)]) * rng.standard_normal(50)
    out = update_mixing(X, S + 1e-9 * rng.standard_normal((2, 50)), rng=rng, max_coherence=0.95)
    assert abs(out[:, 0] @ out[:, 1]) <= 0.95


def test_initial_thresholds():
    row = np.zeros((1, 100))
    row[0, -2:] = [10.0, 9.0]
    assert initial_thresholds(row, np.eye(1), 0.0)[0] == 9.0
    assert initial_thresholds(row, np.eye(1), 20.0)[0] == 20.0
    assert initial_thresholds(np.zeros((1, 100)), np.eye(1), 0.3)[0] == 0.3


def test_order_statistic_matches_sort(rng):
    P = rng.standard_normal((5, 450))
    q = 5  # ceil(0.01 * 450)
    want = np.sort(np.abs(P), axis=1)[:, -q]
    assert np.array_equal(top_order_statistic(P, 0.0), want)


@pytest.mark.parametrize("rule", ["linear", "exponential"])
def test_schedule_monotone_to_floor(rule):
    sched = ThresholdSchedule(np.array([10.0, 4.0]), 0.3, 25, rule)
    vals = np.array([sched.value(j) for j in range(25)])
    assert np.all(np.diff(vals, axis=0) <= 1e-12)
    assert np.array_equal(vals[-1], [0.3, 0.3])
    assert np.allclose(vals[0], [10.0, 4.0])


def test_schedule_validation():
    with pytest.raises(ValueError):
        ThresholdSchedule(np.array([1.0]), 2.0, 5)
    with pytest.raises(ValueError):
        ThresholdSchedule(np.array([1.0]), 0.0, 0)


def test_scalar_case():
    X = np.array([[3.0, -0.2, 0.0, 5.0]])
    res = gmca(X, 1, SolverParams(inner_iters=5))
    assert abs(res.A_est[0, 0]) == 1.0
    floor = 3 * estimate_noise_sigma(X)
    want = np.sign(X) * np.maximum(np.abs(X) - floor, 0) * res.A_est[0, 0]
    assert np.allclose(res.S_est, want)


def test_sample_permutation_equivariance():
    scene = _clean_scene(4, t=256)
    perm = np.random.default_rng(1).permutation(256)
    params = SolverParams(inner_iters=30, rng_seed=2)
    a = gmca(scene.X, 8, params)
    b = gmca(scene.X[:, perm], 8, params)
    assert np.allclose(a.A_est, b.A_est, atol=1e-8)
    assert np.allclose(a.S_est[:, perm], b.S_est, atol=1e-8)


def test_rejects_bad_n():
    with pytest.raises(ValueError):
        gmca(np.ones((2, 5)), 3)


def test_deterministic_given_seed():
    X = _clean_scene(1, t=256).X
    params = SolverParams(inner_iters=20, rng_seed=5)
    assert np.array_equal(gmca(X, 8, params).A_est, gmca(X, 8, params).A_est)


@pytest.mark.slow
def test_clean_separation():
    wins = 0
    for trial in range(20):
        scene = _clean_scene(100 + trial)
        res = gmca(scene.X, 8, SolverParams(rng_seed=trial))
        wins += success(delta_A(res.A_est, scene.A))
    assert wins >= 18
