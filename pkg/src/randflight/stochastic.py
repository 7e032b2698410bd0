"""Seeded randomness for Poisson-switched random flights.

All generators are Philox (counter-based) streams keyed by a 64-bit seed.
Child seeds are derived with :func:`derive_seed`, which hashes the parent
seed together with an integer key path through :class:`numpy.random.SeedSequence`:

    child = SeedSequence(entropy=seed, spawn_key=keys).generate_state(1, uint64)[0]

so ``derive_seed(s, 3)`` is the seed of replica 3 under master seed ``s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import poch

__all__ = [
    "GammaPath",
    "DirectionSequence",
    "DirectionLaw",
    "UniformSphere",
    "RandomAxis",
    "make_rng",
    "derive_seed",
    "sample_gamma_path",
    "sample_directions",
    "exact_gamma_moment",
]

_SEED_MAX = 2**64 - 1


def _check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator for ``seed``."""
    return np.random.Generator(np.random.Philox(_check_seed(seed)))


def derive_seed(seed, *keys: int) -> int:
    """Deterministic child seed of ``seed`` along the integer key path ``keys``."""
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class GammaPath:
    """Unit-rate Poisson arrivals ``Γ_1 < ... < Γ_n`` and their spacings ``γ_k``.

    The convention ``Γ_0 = 0`` is implicit; ``arrivals`` starts at ``Γ_1``.
    """

    spacings: np.ndarray
    arrivals: np.ndarray

    def __post_init__(self):
        gam = np.array(self.spacings, dtype=float)
        arr = np.array(self.arrivals, dtype=float)
        if gam.ndim != 1 or gam.shape != arr.shape:
            raise ValueError("spacings and arrivals must be 1-d arrays of equal length")
        if gam.size and not (np.all(np.isfinite(gam)) and np.all(gam > 0)):
            raise ValueError("spacings must be finite and positive")
        if gam.size and np.any(np.diff(arr) <= 0):
            raise ValueError("arrivals must be strictly increasing")
        if not np.allclose(arr, np.cumsum(gam), rtol=1e-12, atol=0.0):
            raise ValueError("arrivals must be the cumulative sums of the spacings")
        gam.setflags(write=False)
        arr.setflags(write=False)
        object.__setattr__(self, "spacings", gam)
        object.__setattr__(self, "arrivals", arr)

    @property
    def n(self) -> int:
        return self.spacings.size

    def with_origin(self) -> np.ndarray:
        """Arrivals with ``Γ_0 = 0`` prepended (length ``n + 1``)."""
        return np.concatenate(([0.0], self.arrivals))


def sample_gamma_path(n: int, seed) -> GammaPath:
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = make_rng(seed)
    gam = rng.standard_exponential(int(n))
    # exponential draws of exactly 0.0 have probability ~2^-53 per draw
    gam = np.where(gam > 0, gam, np.finfo(float).tiny)
    return GammaPath(gam, np.cumsum(gam))


class DirectionLaw:
    """A law on the unit sphere ``S^{d-1}``.

    Subclasses implement :meth:`draw` and must set ``symmetric = True`` only
    if the law is invariant under ``ε -> -ε`` (which gives ``E ε = 0`` and
    vanishing odd coordinate moments).
    """

    name = "abstract"
    symmetric = False

    def draw(self, rng: np.random.Generator, n: int, d: int) -> np.ndarray:
        raise NotImplementedError


class UniformSphere(DirectionLaw):
    """Uniform law on ``S^{d-1}`` via normalized standard Gaussians."""

    name = "uniform-sphere"
    symmetric = True

    def draw(self, rng, n, d):
        z = rng.standard_normal((n, d))
        norms = np.linalg.norm(z, axis=1)
        # a zero Gaussian vector has probability 0; redraw defensively
        bad = norms == 0
        while np.any(bad):
            z[bad] = rng.standard_normal((int(bad.sum()), d))
            norms = np.linalg.norm(z, axis=1)
            bad = norms == 0
        return z / norms[:, None]


class RandomAxis(DirectionLaw):
    """``±e_j`` with ``j`` uniform and an independent fair sign."""

    name = "random-axis"
    symmetric = True

    def draw(self, rng, n, d):
        axes = rng.integers(0, d, size=n)
        signs = rng.choice(np.array([-1.0, 1.0]), size=n)
        out = np.zeros((n, d))
        out[np.arange(n), axes] = signs
        return out


@dataclass(frozen=True, eq=False)
class DirectionSequence:
    vectors: np.ndarray
    law: str = UniformSphere.name
    dimension: int = field(init=False)

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=float)
        if vec.ndim != 2 or vec.shape[1] < 1:
            raise ValueError("vectors must have shape (n, d) with d >= 1")
        if vec.size and np.max(np.abs(np.linalg.norm(vec, axis=1) - 1.0)) > 1e-12:
            raise ValueError("direction vectors must have unit norm")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "dimension", vec.shape[1])

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def projections(self, j: int) -> np.ndarray:
        """Coordinates ``<ε_i, e_j>`` for all ``i``."""
        return self.vectors[:, j]

    def mean_zscore(self) -> np.ndarray:
        """Per-coordinate z-score of the empirical mean against ``E ε = 0``."""
        if self.n < 2:
            return np.zeros(self.dimension)
        se = self.vectors.std(axis=0, ddof=1) / np.sqrt(self.n)
        mean = self.vectors.mean(axis=0)
        return np.divide(mean, se, out=np.zeros_like(mean), where=se > 0)


def sample_directions(n: int, d: int, seed, law: DirectionLaw | None = None) -> DirectionSequence:
    if d < 1:
        raise ValueError("dimension d must be >= 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    law = UniformSphere() if law is None else law
    if not law.symmetric:
        raise ValueError(f"direction law {law.name!r} does not declare symmetry (E eps = 0)")
    vec = law.draw(make_rng(seed), int(n), int(d))
    return DirectionSequence(vec, law=law.name)


def exact_gamma_moment(k, beta):
    """``E Γ_k^β = Γ(k+β)/Γ(k)`` for ``Γ_k ~ Gamma(k, 1)``.

    Evaluated with the Pochhammer symbol, which works on log-gamma
    differences internally and stays finite for large ``k``.
    """
    k = np.asarray(k, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    if np.any(k + beta <= 0):
        raise ValueError("moment diverges: need k + beta > 0")
    out = poch(k, beta)
    return float(out) if out.ndim == 0 else out
