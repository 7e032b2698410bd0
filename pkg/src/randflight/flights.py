"""Rescaled random-flight polylines ``X_n`` for the three growth regimes.

Switching moments are ``T_k = f(Γ_k)`` for a unit-rate Poisson process. Each
builder returns the polyline with knots ``t_{n,k}`` and values
``X_n(t_{n,k})``, ``k = 0..n``, normalized as follows:

* polynomial ``f(t) = t^α``: knots ``(Γ_k/Γ_n)^α``, values
  ``n^{1/2-α} Σ_{i<=k} ε_i (Γ_i^α - Γ_{i-1}^α)``;
* exponential ``f(t) = e^{βt}``: knots ``e^{-β(Γ_n-Γ_k)}``, values
  ``Σ_{i<=k} ε_i (e^{-β(Γ_n-Γ_i)} - e^{-β(Γ_n-Γ_{i-1})})``;
* super-exponential ``f = exp(logf)``: knots ``f(Γ_k)/f(Γ_n)``, values
  ``Σ_{i<=k} ε_i (f(Γ_i) - f(Γ_{i-1})) / f(Γ_n)``.

with ``Γ_0 = 0`` and the knot ``t_{n,0} = 0``. Exponential-family quantities
are always formed as ``exp`` of differences, so ``f(Γ_n)`` is never
materialized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .paths import Polyline
from .stochastic import (
    DirectionLaw,
    DirectionSequence,
    GammaPath,
    derive_seed,
    sample_directions,
    sample_gamma_path,
)

__all__ = [
    "Polynomial",
    "Exponential",
    "SuperExponential",
    "RegimeConfig",
    "LOGF_PRESETS",
    "FlightRealization",
    "build_polynomial_flight",
    "build_exponential_flight",
    "build_superexp_flight",
    "build_flight",
    "regime_from_dict",
]


@dataclass(frozen=True)
class Polynomial:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ValueError(f"polynomial regime requires alpha > 1/2, got alpha = {self.alpha}")

    name = "polynomial"
    bounded = False

    def to_dict(self) -> dict:
        return {"variant": "polynomial", "alpha": float(self.alpha)}


@dataclass(frozen=True)
class Exponential:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"exponential regime requires beta > 0, got beta = {self.beta}")

    name = "exponential"
    bounded = True

    def to_dict(self) -> dict:
        return {"variant": "exponential", "beta": float(self.beta)}


def _square_gap(a, b):
    return (a - b) * (a + b)


def _cube_gap(a, b):
    return (a - b) * (a * a + a * b + b * b)


def _double_exp_gap(a, b):
    # e^a - e^b = e^b expm1(a - b); stays finite in sign when e^b overflows
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(b) * np.expm1(a - b)
    return np.where(a == b, 0.0, out)


# name -> (log f, d/dt log f, (a, b) -> log f(a) - log f(b))
LOGF_PRESETS: dict[str, tuple[Callable, Callable, Callable]] = {
    "exp-square": (lambda t: np.square(t), lambda t: 2.0 * np.asarray(t), _square_gap),
    "exp-cube": (lambda t: np.power(t, 3), lambda t: 3.0 * np.square(t), _cube_gap),
    "double-exp": (lambda t: np.exp(t), lambda t: np.exp(t), _double_exp_gap),
}

_DERIVATIVE_GRID = 2.0 ** np.arange(0, 7)


@dataclass(frozen=True)
class SuperExponential:
    """``f = exp(logf)`` with ``(log f)' -> inf``.

    Pick a preset by name, or pass ``logf``/``dlogf`` callables directly
    (such configs cannot be round-tripped through :meth:`to_dict`).
    ``gap(a, b) = logf(a) - logf(b)`` is what the builder evaluates; presets
    factor it to avoid cancellation and overflow.
    """

    preset: str = "exp-square"
    logf: Callable | None = None
    dlogf: Callable | None = None
    gap: Callable | None = None

    name = "superexponential"
    bounded = True

    def __post_init__(self):
        if self.logf is None:
            if self.preset not in LOGF_PRESETS:
                raise ValueError(f"unknown super-exponential preset {self.preset!r}")
            logf, dlogf, gap = LOGF_PRESETS[self.preset]
            object.__setattr__(self, "logf", logf)
            object.__setattr__(self, "dlogf", dlogf)
            object.__setattr__(self, "gap", gap)
        else:
            if self.dlogf is None:
                raise ValueError("a custom logf needs its derivative dlogf")
            object.__setattr__(self, "preset", "custom")
            if self.gap is None:
                logf = self.logf
                object.__setattr__(self, "gap", lambda a, b: logf(a) - logf(b))
        slope = np.asarray(self.dlogf(_DERIVATIVE_GRID), dtype=float)
        if not (np.all(slope > 0) and np.all(np.diff(slope) > 0)):
            raise ValueError("(log f)' must be positive and increasing (f'/f -> infinity)")

    def to_dict(self) -> dict:
        if self.preset == "custom":
            raise ValueError("custom super-exponential functions are not serializable")
        return {"variant": "superexponential", "preset": self.preset}


RegimeConfig = Union[Polynomial, Exponential, SuperExponential]


def regime_from_dict(obj: dict) -> RegimeConfig:
    variant = obj.get("variant")
    if variant == "polynomial":
        return Polynomial(float(obj["alpha"]))
    if variant == "exponential":
        return Exponential(float(obj["beta"]))
    if variant == "superexponential":
        return SuperExponential(obj.get("preset", "exp-square"))
    raise ValueError(f"unknown regime variant {variant!r}")


@dataclass(frozen=True, eq=False)
class FlightRealization:
    """One flight: the polyline plus the randomness that produced it.

    ``knots``/``values`` keep all ``n + 1`` vertices. ``path`` is the same
    polyline with numerically coincident knots merged (e.g. ``exp`` of very
    negative differences underflowing to 0.0).
    """

    path: Polyline
    knots: np.ndarray
    values: np.ndarray
    gamma: GammaPath
    directions: DirectionSequence
    regime: RegimeConfig
    n: int
    representation: str = "direct"


def _randomness(n: int, d: int, seed, law: DirectionLaw | None):
    gamma = sample_gamma_path(n, derive_seed(seed, 0))
    eps = sample_directions(n, d, derive_seed(seed, 1), law=law)
    return gamma, eps


def _assemble(knots, weights, eps, gamma, regime, n, representation="direct"):
    steps = eps.vectors * weights[:, None]
    values = np.vstack([np.zeros((1, eps.dimension)), np.cumsum(steps, axis=0)])
    knots = np.concatenate(([0.0], knots))
    path = Polyline.from_knots(knots, values)
    return FlightRealization(path, knots, values, gamma, eps, regime, n, representation)


def build_polynomial_flight(alpha: float, n: int, d: int, seed, law: DirectionLaw | None = None) -> FlightRealization:
    regime = Polynomial(alpha)
    if n < 1:
        raise ValueError("n must be >= 1")
    gamma, eps = _randomness(n, d, seed, law)
    arr = gamma.arrivals
    knots = (arr / arr[-1]) ** alpha
    knots[-1] = 1.0
    # n^{1/2-α} Γ_i^α increments == scale * diff of (Γ_i/Γ_n)^α
    scale = np.exp(alpha * np.log(arr[-1]) + (0.5 - alpha) * np.log(n))
    weights = scale * np.diff(np.concatenate(([0.0], knots)))
    return _assemble(knots, weights, eps, gamma, regime, n)


def build_exponential_flight(
    beta: float, n: int, d: int, seed, representation: str = "direct", law: DirectionLaw | None = None
) -> FlightRealization:
    """Exponential-regime flight.

    ``representation="reversed"`` gives the equal-in-law polyline with knots
    ``τ_{n,k} = e^{-β(γ_1+...+γ_{k-1})}`` (``τ_{n,1} = 1``) and values
    ``Σ_{i=k}^{n-1} ε_i (e^{-βΓ_{i-1}} - e^{-βΓ_i}) + ε_n e^{-βΓ_{n-1}}``.
    """
    regime = Exponential(beta)
    if n < 1:
        raise ValueError("n must be >= 1")
    gamma, eps = _randomness(n, d, seed, law)
    g0 = gamma.with_origin()
    gam = gamma.spacings

    if representation == "direct":
        knots = np.exp(-beta * (g0[-1] - g0[1:]))
        knots[-1] = 1.0
        # e^{-β(Γ_n-Γ_i)} (1 - e^{-βγ_i})
        weights = knots * -np.expm1(-beta * gam)
        return _assemble(knots, weights, eps, gamma, regime, n)

    if representation == "reversed":
        tau = np.exp(-beta * g0[:-1])  # τ_{n,k} for k = 1..n
        weights = tau * -np.expm1(-beta * gam)
        weights[-1] = tau[-1]
        steps = eps.vectors * weights[:, None]
        tail = np.cumsum(steps[::-1], axis=0)  # tail[r] = Y_n(τ_{n, n-r})
        knots = np.concatenate(([0.0], tau[::-1]))
        values = np.vstack([np.zeros((1, eps.dimension)), tail])
        path = Polyline.from_knots(knots, values)
        return FlightRealization(path, knots, values, gamma, eps, regime, n, "reversed")

    raise ValueError(f"unknown representation {representation!r}")


def build_superexp_flight(
    logf: Callable | str | SuperExponential = "exp-square",
    n: int = 1,
    d: int = 1,
    seed=0,
    law: DirectionLaw | None = None,
) -> FlightRealization:
    if isinstance(logf, SuperExponential):
        regime = logf
    elif isinstance(logf, str):
        regime = SuperExponential(logf)
    else:
        raise TypeError("pass a preset name or a SuperExponential config (custom logf needs dlogf)")
    if n < 1:
        raise ValueError("n must be >= 1")
    gamma, eps = _randomness(n, d, seed, law)
    G = gamma.with_origin()
    rel = np.asarray(regime.gap(G[1:], G[-1]), dtype=float)  # log f(Γ_k) - log f(Γ_n)
    step = np.asarray(regime.gap(G[:-1], G[1:]), dtype=float)  # log f(Γ_{k-1}) - log f(Γ_k)
    if np.any(np.isnan(rel)) or np.any(np.isnan(step)) or np.any(step == np.inf):
        raise ValueError("log f is not finite on the realized arrivals")
    if np.any(step > 0):
        raise ValueError("log f is not monotone on the realized arrivals")
    knots = np.exp(rel)
    knots[-1] = 1.0
    # f(Γ_i)/f(Γ_n) (1 - f(Γ_{i-1})/f(Γ_i))
    weights = knots * -np.expm1(step)
    return _assemble(knots, weights, eps, gamma, regime, n)


def build_flight(regime: RegimeConfig, n: int, d: int, seed, **kw) -> FlightRealization:
    if isinstance(regime, Polynomial):
        return build_polynomial_flight(regime.alpha, n, d, seed, **kw)
    if isinstance(regime, Exponential):
        return build_exponential_flight(regime.beta, n, d, seed, **kw)
    if isinstance(regime, SuperExponential):
        return build_superexp_flight(regime, n, d, seed, **kw)
    raise TypeError(f"not a regime config: {regime!r}")
