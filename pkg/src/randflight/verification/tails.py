"""Uniform integrability of ``d(0, X_n)^p`` and the bounds that give it."""
from __future__ import annotations

import math
import time

import numpy as np

from ..paths import PathSample
from ..stochastic import UniformSphere, make_rng
from .lemmas import _linearization_error, power_increment
from .report import CheckReport, loglog_slope

__all__ = [
    "BOUNDED_VARIANTS",
    "estimate_tail_functional",
    "estimate_decomposition_bounds",
    "check_dimension_reduction",
]

# regimes whose flights and limits stay in the closed unit ball
BOUNDED_VARIANTS = frozenset({"exponential", "superexponential"})


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def estimate_tail_functional(sample: PathSample, R: float, p: float = 1.0) -> CheckReport:
    """``(1/m) Σ |x|_∞^p 1{|x|_∞ >= R}`` over the paths of ``sample``.

    For samples whose metadata names a bounded regime and ``R > 1`` the
    target is exactly 0; otherwise the estimate is reported without a bound.
    """
    if not R > 0 or not p >= 1:
        raise ValueError("need R > 0 and p >= 1")
    t0 = time.perf_counter()
    norms = sample.sup_norms()
    terms = np.where(norms >= R, norms**p, 0.0)
    est, se = _mean_se(terms)
    variant = (sample.meta.get("regime") or {}).get("variant")
    bounded = variant in BOUNDED_VARIANTS and R > 1
    bound = 0.0 if bounded else None
    return CheckReport(
        name="tail_functional",
        params={"R": R, "p": p, "regime": sample.meta.get("regime"), "n": sample.meta.get("n")},
        stat={"estimate": est, "se": se, "tail_fraction": float((norms >= R).mean()), "max_sup_norm": float(norms.max())},
        bound=bound,
        slack=-est if bounded else math.inf,
        verdict=bool(est == 0.0) if bounded else True,
        replicas=len(sample),
        seeds=[sample.meta.get("seed")],
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


def _poisson_paths(rng, replicas: int, n: int):
    spacings = rng.standard_exponential((replicas, n))
    return spacings, np.cumsum(spacings, axis=1)


def _increments(spacings, arrivals, alpha):
    """``Γ_i^α - Γ_{i-1}^α`` for ``i = 1..n`` (``Γ_0 = 0``)."""
    out = np.empty_like(arrivals)
    out[:, 0] = arrivals[:, 0] ** alpha
    out[:, 1:] = power_increment(arrivals[:, :-1], spacings[:, 1:], alpha)
    return out


def estimate_decomposition_bounds(
    alpha: float = 1.0,
    n: int = 500,
    N: int = 2,
    R_grid=(1.0, 2.0, 4.0),
    replicas: int = 10_000,
    seed=0,
    d: int = 1,
    j: int = 0,
    z: float = 3.0,
    max_exponent: float = -2.0,
) -> CheckReport:
    """Three-term split of ``P(max_k |X_n^{(j)}(t_{n,k})| >= 3R)``.

    With ``c_i = <ε_i, e_j>``, ``B_n = n^{α-1/2}`` and partial sums over
    ``i <= k``:

    * I   = ``P(max |Σ c_i (Γ_i^α - Γ_{i-1}^α - α γ_i Γ_{i-1}^{α-1})| > B_n R)``
    * II  = ``P(max |α Σ c_i γ_i (Γ_{i-1}^{α-1} - (i-1)^{α-1})| > B_n R)``
    * III = ``P(max |α Σ c_i γ_i (i-1)^{α-1}| > B_n R)``

    The ``i = 1`` linear terms use ``Γ_0^{α-1} = 0^{α-1}``, read as 1 for
    ``α = 1`` and dropped otherwise, identically in all three pieces so the
    split telescopes. Verdict: the union bound holds at every ``R`` within
    ``z`` standard errors, and log-log slopes of I, II, III and of
    ``P(max_k |X_n| >= R)`` against ``R`` are all ``<= max_exponent``.
    """
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    if N < 1:
        raise ValueError("N must be >= 1")
    t0 = time.perf_counter()
    R_grid = np.asarray(R_grid, dtype=float)
    rng = make_rng(seed)
    spacings, arrivals = _poisson_paths(rng, replicas, n)
    c = UniformSphere().draw(rng, replicas * n, d)[:, j].reshape(replicas, n)
    B_n = float(n) ** (alpha - 0.5)

    idx = np.arange(n, dtype=float)  # i - 1
    lin_random = np.empty_like(arrivals)
    lin_det = np.empty_like(arrivals)
    first = 1.0 if alpha == 1.0 else 0.0
    lin_random[:, 0] = alpha * spacings[:, 0] * first
    lin_det[:, 0] = alpha * spacings[:, 0] * first
    lin_random[:, 1:] = alpha * spacings[:, 1:] * arrivals[:, :-1] ** (alpha - 1)
    lin_det[:, 1:] = alpha * spacings[:, 1:] * idx[1:] ** (alpha - 1)

    remainder = np.empty_like(arrivals)
    remainder[:, 0] = arrivals[:, 0] ** alpha - lin_random[:, 0]
    remainder[:, 1:] = _linearization_error(arrivals[:, :-1], spacings[:, 1:], alpha)

    def peak(terms):
        return np.abs(np.cumsum(c * terms, axis=1)).max(axis=1) / B_n

    stat_I = peak(remainder)
    stat_II = peak(lin_random - lin_det)
    stat_III = peak(lin_det)
    stat_total = peak(_increments(spacings, arrivals, alpha))

    rows = []
    split_slack = math.inf
    for R in R_grid:
        ind = [(stat_I > R), (stat_II > R), (stat_III > R)]
        lhs = stat_total >= 3 * R
        gap = lhs.astype(float) - sum(x.astype(float) for x in ind)
        mean, se = _mean_se(gap)
        split_slack = min(split_slack, z * se - mean)
        rows.append({
            "R": float(R),
            "I": float(ind[0].mean()),
            "II": float(ind[1].mean()),
            "III": float(ind[2].mean()),
            "P_max_ge_3R": float(lhs.mean()),
            "P_max_ge_R": float((stat_total >= R).mean()),
            "split_holds": mean <= z * se,
        })
    exponents = {
        key: loglog_slope(R_grid, [r[key] for r in rows]) for key in ("I", "II", "III", "P_max_ge_R")
    }
    worst_exponent = max(exponents.values())
    ok = split_slack >= 0 and worst_exponent <= max_exponent
    return CheckReport(
        name="decomposition_bounds",
        params={"alpha": alpha, "n": n, "N": N, "R_grid": R_grid, "d": d, "j": j, "z": z,
                "max_exponent": max_exponent, "guaranteed_exponent": -2 * N},
        stat={"rows": rows, "fitted_exponents": exponents, "split_slack": split_slack},
        bound={"split": "P(max >= 3R) <= I + II + III", "max_exponent": max_exponent},
        slack=min(split_slack, max_exponent - worst_exponent),
        verdict=bool(ok),
        replicas=replicas,
        seeds=[seed],
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


def check_dimension_reduction(
    alpha: float = 1.0,
    n: int = 200,
    R: float = 2.0,
    d: int = 2,
    replicas: int = 10_000,
    seed=0,
    z: float = 3.0,
) -> CheckReport:
    """Union bound reducing the ``d``-dimensional maximum to coordinates.

    ``P(max_k |Σ_{i<=k} ε_i Δ_i| >= B_n R) <= Σ_j P(Σ_{i<=n} |<ε_i, e_j>| Δ_i >= B_n R / d)``
    with ``Δ_i = Γ_i^α - Γ_{i-1}^α > 0`` (the coordinate sums of absolute
    values are non-decreasing in ``k``, so their maximum sits at ``k = n``).
    """
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    if d < 1:
        raise ValueError("d must be >= 1")
    t0 = time.perf_counter()
    rng = make_rng(seed)
    spacings, arrivals = _poisson_paths(rng, replicas, n)
    eps = UniformSphere().draw(rng, replicas * n, d).reshape(replicas, n, d)
    delta = _increments(spacings, arrivals, alpha)
    B_n = float(n) ** (alpha - 0.5)

    walk = np.cumsum(eps * delta[:, :, None], axis=1)
    lhs = np.linalg.norm(walk, axis=2).max(axis=1) >= B_n * R
    coord = (np.abs(eps) * delta[:, :, None]).sum(axis=1) >= B_n * R / d  # (replicas, d)
    gap = lhs.astype(float) - coord.sum(axis=1)
    mean, se = _mean_se(gap)
    per_coord = coord.mean(axis=0)
    return CheckReport(
        name="dimension_reduction",
        params={"alpha": alpha, "n": n, "R": R, "d": d, "z": z},
        stat={"lhs": float(lhs.mean()), "rhs": float(per_coord.sum()), "per_coordinate": per_coord,
              "mean_gap": mean, "se": se},
        bound="sum_j P(coordinate j >= B_n R / d)",
        slack=z * se - mean,
        verdict=bool(mean <= z * se),
        replicas=replicas,
        seeds=[seed],
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )
