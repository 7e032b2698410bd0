import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randflight.flights import Exponential, Polynomial, SuperExponential
from randflight.limits import (
    covariance_sqrt,
    polynomial_limit_variance,
    sample_limit,
    sample_limit_exponential,
    sample_limit_polynomial,
    sample_limit_superexp,
)
from randflight.paths import sup_distance


def endpoint_draws(alpha, draws, M=16, d=1, cov=None):
    # the endpoint law does not depend on M, so a coarse grid is enough
    return np.array([sample_limit_polynomial(alpha, M, d, cov, seed=s).v[-1] for s in range(draws)])


def test_variance_formula_by_quadrature():
    # 2α ∫_0^t s^{(α-1)/α} ds, midpoint rule as independent oracle
    for alpha in (0.75, 1.0, 1.5, 3.0):
        s = (np.arange(200_000) + 0.5) / 200_000 * 0.7
        quad = 2 * alpha * np.sum(s ** ((alpha - 1) / alpha)) * 0.7 / 200_000
        assert polynomial_limit_variance(alpha, 0.7) == pytest.approx(quad, rel=1e-4)


def test_polynomial_limit_starts_at_origin():
    y = sample_limit_polynomial(1.2, 64, 3, seed=5)
    np.testing.assert_array_equal(y.v[0], 0)
    np.testing.assert_allclose(y.t, np.arange(65) / 64)


def test_polynomial_endpoint_variance_alpha_one():
    x = endpoint_draws(1.0, 100_000)[:, 0]
    assert x.var() == pytest.approx(2.0, rel=0.03)


def test_polynomial_disjoint_increments_uncorrelated():
    ys = np.array([sample_limit_polynomial(1.0, 4, seed=s).v[:, 0] for s in range(100_000)])
    a, b = ys[:, 1] - ys[:, 0], ys[:, 3] - ys[:, 2]
    prod = (a - a.mean()) * (b - b.mean())
    assert abs(prod.mean()) <= 4 * prod.std(ddof=1) / math.sqrt(prod.size)


def test_polynomial_increment_variance_matches_formula():
    alpha, M = 1.5, 8
    ys = np.array([sample_limit_polynomial(alpha, M, seed=s).v[:, 0] for s in range(100_000)])
    s_i, t_i = 2, 6
    inc = ys[:, t_i] - ys[:, s_i]
    target = polynomial_limit_variance(alpha, t_i / M) - polynomial_limit_variance(alpha, s_i / M)
    sq = inc**2
    assert abs(sq.mean() - target) <= 4 * sq.std(ddof=1) / math.sqrt(sq.size)


def test_polynomial_custom_covariance():
    cov = np.array([[0.75, 0.0], [0.0, 0.25]])
    x = endpoint_draws(1.0, 40_000, d=2, cov=cov)
    np.testing.assert_allclose(x.var(axis=0), 2 * np.diag(cov), rtol=0.05)
    root = covariance_sqrt(cov, 2)
    np.testing.assert_allclose(root @ root, cov, atol=1e-14)


@pytest.mark.parametrize(
    "cov", [np.eye(2), np.array([[0.5, 0.1], [0.0, 0.5]]), np.array([[1.5, 0.0], [0.0, -0.5]])]
)
def test_bad_covariances_rejected(cov):
    with pytest.raises(ValueError):
        covariance_sqrt(cov, 2)


def test_exponential_limit_geometry():
    y = sample_limit_exponential(1.0, d=2, seed=4)
    assert y.t[-1] == 1.0
    np.testing.assert_array_equal(y.v[0], 0)
    # |Y(t_k)| <= t_k: the remaining weights sum to t_k
    assert np.all(np.linalg.norm(y.v, axis=1) <= y.t * (1 + 1e-12) + 1e-15)


@given(beta=st.floats(0.1, 5), seed=st.integers(0, 2**63), d=st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_exponential_limit_unit_ball(beta, seed, d):
    assert sample_limit_exponential(beta, d=d, seed=seed).sup_norm() <= 1 + 1e-12


def test_exponential_truncation_error():
    for seed in range(50):
        coarse = sample_limit_exponential(0.7, 1e-6, 2, seed)
        fine = sample_limit_exponential(0.7, 1e-8, 2, seed)
        assert sup_distance(coarse, fine) < 1e-6


def test_superexp_limit():
    y = sample_limit_superexp(3, seed=8)
    assert y.sup_norm() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(y.eval(0.5), y.v[-1] / 2)
    assert not np.array_equal(y.v[-1], sample_limit_superexp(3, seed=9).v[-1])


def test_samplers_deterministic():
    for reg in (Polynomial(1.0), Exponential(2.0), SuperExponential()):
        a, b = sample_limit(reg, 2, 31), sample_limit(reg, 2, 31)
        assert a.t.tobytes() == b.t.tobytes() and a.v.tobytes() == b.v.tobytes()


def test_sampler_preconditions():
    with pytest.raises(ValueError):
        sample_limit_polynomial(0.5)
    with pytest.raises(ValueError):
        sample_limit_polynomial(1.0, M=1)
    with pytest.raises(ValueError):
        sample_limit_exponential(1.0, tol=0.0)
    with pytest.raises(TypeError):
        sample_limit("polynomial", 1, 0)
