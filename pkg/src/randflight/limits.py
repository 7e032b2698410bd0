"""Samplers for the limit laws ``Y`` of the three regimes."""
from __future__ import annotations

import numpy as np

from .flights import Exponential, Polynomial, RegimeConfig, SuperExponential
from .paths import Polyline
from .stochastic import derive_seed, make_rng, sample_directions

__all__ = [
    "polynomial_limit_variance",
    "sample_limit_polynomial",
    "sample_limit_exponential",
    "sample_limit_superexp",
    "sample_limit",
    "covariance_sqrt",
]

DEFAULT_GRID = 512
DEFAULT_TOL = 1e-8
_BLOCK = 64


def polynomial_limit_variance(alpha: float, t=1.0):
    """``Var`` factor of ``sqrt(2α) ∫_0^t s^{(α-1)/(2α)} dw``: ``2α²/(2α-1) t^{(2α-1)/α}``."""
    return 2 * alpha**2 / (2 * alpha - 1) * np.power(t, (2 * alpha - 1) / alpha)


def covariance_sqrt(cov, d: int) -> np.ndarray:
    """Symmetric square root of a ``d x d`` direction covariance (default ``I/d``)."""
    if cov is None:
        return np.eye(d) / np.sqrt(d)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (d, d):
        raise ValueError(f"covariance must be {d}x{d}")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    if abs(np.trace(cov) - 1.0) > 1e-9:
        raise ValueError("covariance of a unit vector has trace 1")
    w, q = np.linalg.eigh(cov)
    if w.min() < -1e-12:
        raise ValueError("covariance must be positive semidefinite")
    return (q * np.sqrt(np.clip(w, 0, None))) @ q.T


def sample_limit_polynomial(alpha: float, M: int = DEFAULT_GRID, d: int = 1, cov=None, seed=0) -> Polyline:
    """Gaussian limit path on the uniform grid ``k/M``.

    Increments are drawn with their exact covariances
    ``cov * 2α²/(2α-1) (t^{(2α-1)/α} - s^{(2α-1)/α})``, so the only
    approximation is linear interpolation between grid points.
    """
    Polynomial(alpha)
    if M < 2:
        raise ValueError("grid size M must be >= 2")
    root = covariance_sqrt(cov, d)
    grid = np.arange(M + 1) / M
    var = np.diff(polynomial_limit_variance(alpha, grid))
    z = make_rng(seed).standard_normal((M, d))
    steps = (z @ root) * np.sqrt(var)[:, None]
    values = np.vstack([np.zeros((1, d)), np.cumsum(steps, axis=0)])
    return Polyline(grid, values)


def sample_limit_exponential(beta: float, tol: float = DEFAULT_TOL, d: int = 1, seed=0) -> Polyline:
    """Truncated series path with vertices ``t_k = e^{-βΓ_{k-1}}``.

    Arrivals are drawn until ``e^{-βΓ_K} < tol``; vertex values are the tail
    sums over ``i = k..K``. The discarded tail has total weight
    ``e^{-βΓ_K}``, which bounds the sup-norm error. Randomness is consumed in
    fixed-size blocks, so smaller ``tol`` only extends the same sequence.
    """
    Exponential(beta)
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    gam_rng = make_rng(derive_seed(seed, 0))
    dir_seed = derive_seed(seed, 1)
    log_tol = np.log(tol)
    spacings = []
    total = 0.0
    while -beta * total >= log_tol:
        block = gam_rng.standard_exponential(_BLOCK)
        spacings.append(block)
        total += block.sum()
    gam = np.concatenate(spacings)
    arr = np.cumsum(gam)
    K = int(np.searchsorted(-beta * arr < log_tol, True)) + 1
    gam, arr = gam[:K], arr[:K]

    n_blocks = -(-K // _BLOCK)
    eps = np.concatenate([
        sample_directions(_BLOCK, d, derive_seed(dir_seed, b)).vectors for b in range(n_blocks)
    ])[:K]

    start = np.exp(-beta * np.concatenate(([0.0], arr[:-1])))  # t_1..t_K
    weights = start * -np.expm1(-beta * gam)
    tail = np.cumsum((eps * weights[:, None])[::-1], axis=0)[::-1]  # Y(t_k), k=1..K
    t_last = np.exp(-beta * arr[-1])  # t_{K+1}, value 0 after truncation
    knots = np.concatenate(([0.0, t_last], start[::-1]))
    values = np.vstack([np.zeros((2, d)), tail[::-1]])
    return Polyline.from_knots(knots, values)


def sample_limit_superexp(d: int = 1, seed=0) -> Polyline:
    """Degenerate limit ``Y(t) = ε_1 t``."""
    eps = sample_directions(1, d, seed).vectors[0]
    return Polyline(np.array([0.0, 1.0]), np.vstack([np.zeros(d), eps]))


def sample_limit(regime: RegimeConfig, d: int, seed, *, M: int = DEFAULT_GRID, tol: float = DEFAULT_TOL, cov=None) -> Polyline:
    if isinstance(regime, Polynomial):
        return sample_limit_polynomial(regime.alpha, M, d, cov, seed)
    if isinstance(regime, Exponential):
        return sample_limit_exponential(regime.beta, tol, d, seed)
    if isinstance(regime, SuperExponential):
        return sample_limit_superexp(d, seed)
    raise TypeError(f"not a regime config: {regime!r}")
