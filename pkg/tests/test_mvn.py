import numpy as np
import pytest
from scipy.special import ndtr

from latent_composite.core.params import sigma_matrix
from latent_composite.numerics.bvn import phi2
from latent_composite.numerics.linalg import NotPositiveDefiniteError
from latent_composite.numerics.mvn import (
    Rectangle,
    batch_order,
    conditional_34,
    mvn_batch,
    mvn_rectangle,
    phi4,
    phi4_batch,
)


def _random_cov(rng, d=4):
    a = rng.normal(size=(d, d))
    m = a @ a.T + 0.5 * np.eye(d)
    return m


def test_independent_components_factorize():
    upper = np.array([0.3, -0.5, 1.2, 0.0])
    sd = np.array([1.5, 0.7, 1.0, 2.0])
    res = phi4(upper, np.zeros(4), np.diag(sd**2))
    assert res.probability == pytest.approx(np.prod(ndtr(upper / sd)), abs=1e-12)


def test_matches_plain_monte_carlo():
    rng = np.random.default_rng(2024)
    draws = rng.standard_normal((1_000_000, 4))
    for _ in range(10):
        sigma = _random_cov(rng)
        mu = rng.normal(size=4)
        upper = rng.normal(size=4) + 0.5
        x = mu + draws @ np.linalg.cholesky(sigma).T
        p_mc = float(np.mean(np.all(x <= upper, axis=1)))
        res = phi4(upper, mu, sigma)
        tol = 4.0 * np.sqrt(max(p_mc * (1 - p_mc), 1e-6) / draws.shape[0]) + 4.0 * res.error + 1e-5
        assert abs(res.probability - p_mc) < tol


def test_two_bounded_coordinates_are_exact():
    sigma = np.array(
        [[1.0, 0.5, 0.2, 0.1], [0.5, 2.0, 0.3, 0.2], [0.2, 0.3, 1.0, 0.4], [0.1, 0.2, 0.4, 1.0]]
    )
    rect = Rectangle(np.full(4, -np.inf), np.array([0.4, np.inf, -0.2, np.inf]))
    res = mvn_rectangle(rect, np.zeros(4), sigma)
    assert res.n_points == 0
    assert res.probability == pytest.approx(phi2(0.4, -0.2, 0.2), abs=1e-14)


def test_same_seed_same_answer():
    rng = np.random.default_rng(5)
    sigma = _random_cov(rng)
    upper = np.array([0.1, 0.2, -0.3, 0.5])
    a = phi4(upper, np.zeros(4), sigma, seed=9)
    b = phi4(upper, np.zeros(4), sigma, seed=9)
    assert a.probability == b.probability


def test_batch_rows_agree_with_single_calls():
    rng = np.random.default_rng(8)
    sigma = _random_cov(rng)
    mu = rng.normal(size=(3, 4))
    upper = np.array([0.5, 0.0, 0.3, 1.0])
    batch = phi4_batch(upper, mu, sigma)
    for i in range(3):
        single = phi4(upper, mu[i], sigma)
        assert batch.probability[i] == pytest.approx(single.probability, abs=5.0 * single.error + 1e-4)


def test_fixed_order_is_honoured():
    rng = np.random.default_rng(1)
    sigma = _random_cov(rng)
    mu = np.zeros((2, 4))
    upper = np.array([[0.2, -0.1, 0.4, 0.3], [0.2, -0.1, 0.4, 0.3]])
    lower = np.full(upper.shape, -np.inf)
    order = batch_order(lower, upper, mu, sigma)
    assert sorted(order) == [0, 1, 2, 3]
    a = mvn_batch(lower, upper, mu, sigma, order=order)
    b = mvn_batch(lower, upper, mu, sigma)
    np.testing.assert_allclose(a.probability, b.probability, atol=1e-12)


def test_invalid_rectangles_and_covariances():
    with pytest.raises(ValueError):
        mvn_batch(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.zeros(2), np.eye(2))
    bad = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
    with pytest.raises(NotPositiveDefiniteError):
        mvn_batch(np.full(3, -np.inf), np.zeros(3), np.zeros(3), bad)


def test_conditional_moments_match_schur_complement(params):
    s = sigma_matrix(params)
    y = np.array([-5.0, -0.4])
    mu = np.array([-4.9, -1.2, 0.1, -0.2])
    cond = conditional_34(params, y[0], y[1], mu[0], mu[1], mu[2], mu[3])
    s11, s21 = s[:2, :2], s[2:, :2]
    mean = mu[2:] + s21 @ np.linalg.solve(s11, y - mu[:2])
    cov = s[2:, 2:] - s21 @ np.linalg.solve(s11, s21.T)
    np.testing.assert_allclose(cond.mu_cond, mean, atol=1e-12)
    np.testing.assert_allclose(cond.sigma_cond, cov, atol=1e-12)
