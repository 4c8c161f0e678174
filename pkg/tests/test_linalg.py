from __future__ import annotations

import numpy as np
import pytest

from gmvshrink.errors import DataError
from gmvshrink.linalg import (
    CovarianceModel,
    build_covariance,
    haar_orthogonal,
    oracle_generalized_inverse,
    pseudo_inverse,
    sample_covariance,
)


def _penrose(A, G, tol):
    scale = max(1.0, np.abs(A).max())
    assert np.allclose(A @ G @ A, A, atol=tol * scale)
    assert np.allclose(G @ A @ G, G, atol=tol * max(1.0, np.abs(G).max()))
    assert np.allclose((A @ G).T, A @ G, atol=tol)
    assert np.allclose((G @ A).T, G @ A, atol=tol)


def test_sample_covariance_matches_brute_force_loop():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(4, 30))
    mean = [sum(Y[i, t] for t in range(30)) / 30 for i in range(4)]
    brute = np.zeros((4, 4))
    for t in range(30):
        d = Y[:, t] - mean
        brute += np.outer(d, d)
    brute /= 30
    assert np.allclose(sample_covariance(Y), brute, atol=1e-14)


def test_sample_covariance_is_shift_invariant():
    rng = np.random.default_rng(1)
    Y = rng.normal(size=(5, 20))
    S = sample_covariance(Y)
    assert np.allclose(sample_covariance(Y + 3.7), S, atol=1e-12)
    assert np.array_equal(S, S.T)


def test_sample_covariance_rejects_single_observation():
    with pytest.raises(DataError):
        sample_covariance(np.ones((3, 1)))


def test_pseudo_inverse_of_nonsingular_is_inverse():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 6))
    M = A @ A.T + np.eye(6)
    assert np.allclose(pseudo_inverse(M), np.linalg.inv(M), atol=1e-10)


@pytest.mark.parametrize("p,n", [(10, 4), (20, 10), (8, 8), (30, 12)])
def test_pseudo_inverse_penrose_conditions(p, n):
    rng = np.random.default_rng(p * 100 + n)
    S = sample_covariance(rng.normal(size=(p, n)))
    G, rank = pseudo_inverse(S, return_rank=True)
    assert rank == n - 1
    _penrose(S, G, 1e-8)
    assert np.allclose(G, np.linalg.pinv(S, hermitian=True, rcond=p * np.finfo(float).eps), atol=1e-8)


def test_pseudo_inverse_of_zero_is_zero():
    assert np.array_equal(pseudo_inverse(np.zeros((3, 3))), np.zeros((3, 3)))


def test_pseudo_inverse_rejects_asymmetric():
    with pytest.raises(DataError):
        pseudo_inverse(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_haar_is_orthogonal_and_seeded():
    Q = haar_orthogonal(7, np.random.default_rng(5))
    assert np.allclose(Q.T @ Q, np.eye(7), atol=1e-12)
    assert np.array_equal(Q, haar_orthogonal(7, np.random.default_rng(5)))


def test_haar_moments():
    # For Haar Q, E[Q_11] = 0, E[Q_11^2] = 1/p and E[trace Q] = 0
    rng = np.random.default_rng(11)
    p, reps = 4, 4000
    draws = np.array([haar_orthogonal(p, rng) for _ in range(reps)])
    assert abs(draws[:, 0, 0].mean()) < 4 / np.sqrt(p * reps)
    assert abs((draws[:, 0, 0] ** 2).mean() - 1 / p) < 0.02
    assert abs(np.trace(draws, axis1=1, axis2=2).mean()) < 0.06
    # both connected components of O(p) are equally likely
    dets = np.linalg.det(draws)
    assert abs((dets > 0).mean() - 0.5) < 0.04


def test_covariance_model_roundtrip():
    rng = np.random.default_rng(3)
    spec = np.array([2.0, 5.0, 5.0, 10.0])
    model = build_covariance(spec, haar_orthogonal(4, rng))
    assert np.allclose(np.sort(np.linalg.eigvalsh(model.matrix)), np.sort(spec), atol=1e-12)
    assert np.allclose(model.inverse @ model.matrix, np.eye(4), atol=1e-12)
    assert np.allclose(model.sqrt @ model.sqrt, model.matrix, atol=1e-12)
    assert np.allclose(model.inv_sqrt @ model.matrix @ model.inv_sqrt, np.eye(4), atol=1e-12)
    w = model.gmv_weights
    assert abs(w.sum() - 1) < 1e-12
    assert np.isclose(model.variance(w), model.gmv_variance)
    assert np.isclose(model.gmv_variance, 1 / np.linalg.inv(model.matrix).sum())


def test_gmv_weights_match_constrained_optimizer():
    from scipy.optimize import minimize

    rng = np.random.default_rng(4)
    model = build_covariance(np.array([1.0, 2.0, 3.0, 7.0, 9.0]), haar_orthogonal(5, rng))
    res = minimize(
        lambda w: w @ model.matrix @ w,
        np.full(5, 0.2),
        constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1}],
        method="SLSQP",
        options={"ftol": 1e-14},
    )
    assert np.allclose(res.x, model.gmv_weights, atol=1e-6)


def test_covariance_model_validation():
    with pytest.raises(DataError):
        CovarianceModel(np.array([1.0, 0.0]), np.eye(2))
    with pytest.raises(DataError):
        CovarianceModel(np.array([1.0, 1.0]), np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DataError):
        CovarianceModel(np.array([1.0, 1.0, 1.0]), np.eye(2))


def test_relative_loss_zero_at_gmv():
    model = build_covariance(np.array([1.0, 4.0]), np.eye(2))
    assert abs(model.relative_loss(model.gmv_weights)) < 1e-14
    assert np.isclose(model.relative_loss(np.array([0.5, 0.5])), (1.25 - 0.8) / 0.8)


def test_oracle_generalized_inverse_reduces_to_pinv_for_isotropic():
    rng = np.random.default_rng(6)
    p, n, s2 = 12, 6, 2.5
    model = build_covariance(np.full(p, s2), np.eye(p))
    X = rng.normal(size=(p, n))
    X = X - X.mean(axis=1, keepdims=True)
    S = sample_covariance(np.sqrt(s2) * X)
    assert np.allclose(oracle_generalized_inverse(model, X), pseudo_inverse(S), atol=1e-9)


def test_oracle_generalized_inverse_is_reflexive_generalized_inverse():
    rng = np.random.default_rng(7)
    p, n = 18, 10
    model = build_covariance(np.linspace(1, 10, p), haar_orthogonal(p, rng))
    X = rng.normal(size=(p, n))
    X = X - X.mean(axis=1, keepdims=True)
    S = model.sqrt @ (X @ X.T / n) @ model.sqrt
    G = oracle_generalized_inverse(model, X)
    assert np.allclose(S @ G @ S, S, atol=1e-8)
    assert np.allclose(G @ S @ G, G, atol=1e-8 * np.abs(G).max())


def test_sample_covariance_constant_rows_exactly_zero():
    Y = np.full((3, 10), 0.01)
    assert np.array_equal(sample_covariance(Y), np.zeros((3, 3)))
    assert np.array_equal(sample_covariance(np.array([[1.0, 3.0]])), np.array([[1.0]]))
