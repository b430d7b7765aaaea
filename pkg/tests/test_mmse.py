"""Tests for robust MMSE estimation via Frank-Wolfe."""

import math

import numpy as np
import pytest

from wdro.errors import SingularBlock
from wdro.mmse import (
    AffineEstimator,
    JointMoments,
    RobustMMSE,
    fw_direction,
    fw_solve,
    mmse_gradient,
    mmse_objective,
)
from wdro.transport import MomentPair, gelbrich_distance


def schur_oracle(S, mx):
    """Objective via an explicit dense inverse."""
    S = np.asarray(S, dtype=float)
    S_xx = S[:mx, :mx]
    S_xy = S[:mx, mx:]
    S_yy = S[mx:, mx:]
    return float(np.trace(S_xx - S_xy @ np.linalg.inv(S_yy) @ S_xy.T))


def scalar_direction_oracle(g, eps):
    """1-D case with nominal variance 1: gamma = g (1 + 1/eps), D = gamma^2/(gamma-g)^2."""
    gamma = g * (1.0 + 1.0 / eps)
    return gamma, gamma**2 / (gamma - g) ** 2


def random_feasible_S(rng, mx, my):
    m = mx + my
    A = rng.randn(m, m)
    return A @ A.T + 0.5 * np.eye(m)


def test_objective_examples():
    S = np.diag([2.0, 3.0, 0.5, 0.7])
    assert abs(mmse_objective(S, 2) - 5.0) < 1e-14  # block diagonal: Tr[S_xx]
    corr = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-13]])
    assert abs(mmse_objective(corr, 1)) < 1e-10  # perfect correlation: zero MMSE
    rng = np.random.RandomState(2)
    S = random_feasible_S(rng, 3, 2)
    assert abs(mmse_objective(S, 3) - schur_oracle(S, 3)) < 1e-11


def test_objective_rejects_singular_block():
    S = np.diag([1.0, 0.0])
    with pytest.raises(SingularBlock):
        mmse_objective(S, 1)


def test_gradient_block_diagonal_case():
    S = np.diag([2.0, 3.0, 0.5, 0.7])
    grad = mmse_gradient(S, 2)
    expected = np.diag([1.0, 1.0, 0.0, 0.0])
    assert np.max(np.abs(grad - expected)) < 1e-14


def test_gradient_finite_differences():
    rng = np.random.RandomState(5)
    S = random_feasible_S(rng, 2, 2)
    grad = mmse_gradient(S, 2)
    assert np.max(np.abs(grad - grad.T)) < 1e-12
    h = 1e-5
    for _ in range(6):
        H = rng.randn(4, 4)
        H = 0.5 * (H + H.T)
        fd = (mmse_objective(S + h * H, 2) - mmse_objective(S - h * H, 2)) / (2.0 * h)
        inner = float(np.sum(grad * H))
        assert abs(fd - inner) <= 1e-5 * (1.0 + abs(inner))


def test_direction_scalar_example():
    gamma_ref, d_ref = scalar_direction_oracle(0.5, 0.25)
    assert gamma_ref == 2.5 and abs(d_ref - 1.5625) < 1e-15
    res = fw_direction([[0.5]], [[1.0]], 0.25)
    assert abs(res.gamma_star - gamma_ref) < 1e-9
    assert abs(res.D[0, 0] - d_ref) < 1e-9
    assert not res.repaired
    assert res.trace_residual <= 1e-8


def test_direction_zero_gradient_returns_center():
    res = fw_direction(np.zeros((2, 2)), np.diag([1.0, 2.0]), 0.5)
    assert np.all(res.D == np.diag([1.0, 2.0]))
    assert math.isinf(res.gamma_star)


def test_direction_boundary_and_floor():
    rng = np.random.RandomState(7)
    for _ in range(5):
        m = rng.randint(2, 5)
        B = rng.randn(m, m)
        sigma = B @ B.T + 0.3 * np.eye(m)
        A = rng.randn(m, m)
        grad = A @ A.T  # PSD, like the MMSE gradient
        eps = float(rng.uniform(0.2, 1.0))
        res = fw_direction(grad, sigma, eps)
        assert res.trace_residual <= 1e-8
        assert not res.repaired
        lam_floor = np.linalg.eigvalsh(sigma).min()
        assert np.linalg.eigvalsh(res.D).min() >= lam_floor - 1e-8
        # the direction maximizes the linear objective among feasible points
        base = float(np.sum(grad * res.D))
        zero = np.zeros(m)
        for _ in range(50):
            C = res.D + 0.1 * rng.randn(m, m)
            C = 0.5 * (C + C.T)
            w = np.linalg.eigvalsh(C)
            if w.min() < 0:
                continue
            dist = gelbrich_distance(MomentPair(zero, sigma), MomentPair(zero, C))
            if dist > eps:
                continue
            assert float(np.sum(grad * C)) <= base + 1e-7


def test_zero_radius_recovers_classical_estimator():
    rng = np.random.RandomState(11)
    cov = random_feasible_S(rng, 2, 2)
    mean = rng.randn(4)
    nominal = JointMoments(2, 2, mean, cov)
    res = fw_solve(nominal, 0.0, iters=5)
    assert np.max(np.abs(res.S - cov)) < 1e-12
    gain_ref = cov[:2, 2:] @ np.linalg.inv(cov[2:, 2:])
    assert np.max(np.abs(res.estimator.gain - gain_ref)) < 1e-10
    offset_ref = mean[:2] - gain_ref @ mean[2:]
    assert np.max(np.abs(res.estimator.offset - offset_ref)) < 1e-10


def test_block_diagonal_nominal_keeps_zero_gain():
    cov = np.diag([1.0, 2.0, 3.0, 4.0])
    nominal = JointMoments(2, 2, np.array([1.0, -1.0, 0.5, 2.0]), cov)
    res = fw_solve(nominal, 0.4, iters=60)
    assert np.max(np.abs(res.estimator.gain)) < 1e-10
    pred = res.estimator.predict(np.array([9.0, -9.0]))
    assert np.max(np.abs(pred - np.array([1.0, -1.0]))) < 1e-10


def test_iterates_feasible_and_gap_envelope():
    rng = np.random.RandomState(13)
    for _ in range(10):
        cov = random_feasible_S(rng, 3, 3)
        nominal = JointMoments(3, 3, rng.randn(6), cov)
        eps = float(rng.uniform(0.2, 0.8))
        res = fw_solve(nominal, eps, iters=1000)
        lam_floor = np.linalg.eigvalsh(cov).min()
        zero = np.zeros(6)
        center = MomentPair(zero, cov)
        for state in res.states[:: max(1, len(res.states) // 25)]:
            dist = gelbrich_distance(center, MomentPair(zero, state.S))
            assert dist**2 <= eps**2 + 1e-6
            assert np.linalg.eigvalsh(state.S).min() >= lam_floor - 1e-6
        gaps = np.array(res.gaps)
        assert np.all(gaps >= -1e-9)
        C = max(gaps[k] * (k + 2.0) for k in range(min(10, len(gaps))))
        for k, gap in enumerate(gaps):
            assert gap <= C / (k + 2.0) + 1e-9


def test_gap_decreases_and_best_value_monotone():
    rng = np.random.RandomState(17)
    cov = random_feasible_S(rng, 2, 2)
    nominal = JointMoments(2, 2, rng.randn(4), cov)
    res = fw_solve(nominal, 0.5, iters=500)
    assert res.gaps[-1] <= res.gaps[49] + 1e-12
    values = [s.value for s in res.states]
    best = np.maximum.accumulate(values)
    assert np.all(np.diff(best) >= -1e-12)
    # the gap certifies the distance to the optimum
    assert best[-1] + res.gaps[-1] >= max(values) - 1e-12


def test_value_monotone_in_radius():
    rng = np.random.RandomState(19)
    cov = random_feasible_S(rng, 2, 2)
    nominal = JointMoments(2, 2, np.zeros(4), cov)
    prev, prev_gap = None, 0.0
    for eps in (0.0, 0.1, 0.5, 1.0):
        res = fw_solve(nominal, eps, iters=400)
        value = mmse_objective(res.S, 2)
        if prev is not None:
            assert value >= prev - prev_gap - 1e-9
        prev, prev_gap = value, (res.gaps[-1] if res.gaps else 0.0)


def test_singular_nominal_is_regularized():
    cov = np.diag([1.0, 1.0, 1.0, 0.0])
    nominal = JointMoments(2, 2, np.zeros(4), cov)
    res = fw_solve(nominal, 0.2, iters=30)
    assert res.regularization > 0.0
    assert np.isfinite(res.estimator.gain).all()


def test_estimator_wrapper_roundtrip():
    rng = np.random.RandomState(23)
    a = rng.randn(300, 2)
    X = a @ np.array([[1.0, 0.3], [0.0, 0.5]])
    Y = X @ np.array([[0.8], [0.2]]) + 0.1 * rng.randn(300, 1)
    est = RobustMMSE(eps=0.1, iters=100).fit(X, Y)
    assert est.get_params() == {"eps": 0.1, "iters": 100}
    pred = est.predict(Y)
    assert pred.shape == X.shape
    resid = float(np.mean(np.sum((pred - X) ** 2, axis=1)))
    base = float(np.mean(np.sum((X - X.mean(axis=0)) ** 2, axis=1)))
    assert resid < base  # using Y helps
    with pytest.raises(ValueError):
        RobustMMSE().set_params(bogus=1)
    with pytest.raises(ValueError):
        RobustMMSE().fit(X, Y[:10])


def test_affine_estimator_batch_predict():
    est = AffineEstimator(gain=np.array([[2.0, 0.0]]), offset=np.array([1.0]))
    single = est.predict([3.0, 5.0])
    batch = est.predict([[3.0, 5.0], [0.0, 1.0]])
    assert single.shape == (1,)
    assert np.all(batch == np.array([[7.0], [1.0]]))


def test_joint_moments_validation():
    with pytest.raises(ValueError):
        JointMoments(2, 2, np.zeros(3), np.eye(4))
