"""The linearization martingale and Doob's maximal inequality."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..stochastic import UniformSphere, make_rng
from .lemmas import _linearization_error
from .report import CheckReport

__all__ = [
    "MartingaleSample",
    "sample_martingale",
    "corrupt_drift",
    "default_lambdas",
    "check_doob",
    "check_martingale_increments",
]


@dataclass(frozen=True, eq=False)
class MartingaleSample:
    """Replicated paths ``A_0 = 0, A_1, ..., A_n`` (one row per replica).

    ``A_k = Σ_{i<=k} <ε_i, e_j> (Γ_i^α - Γ_{i-1}^α - α γ_i Γ_{i-1}^{α-1})``.
    ``arrivals`` (``Γ_1..Γ_n`` per row) is kept for conditioning checks.
    """

    alpha: float
    n: int
    values: np.ndarray
    j: int = 0
    arrivals: np.ndarray | None = None
    seed: int | None = None
    drift: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != self.n + 1:
            raise ValueError("values must have shape (replicas, n + 1)")
        if np.any(vals[:, 0] != 0):
            raise ValueError("A_0 must be 0")
        if not np.all(np.isfinite(vals)):
            raise ValueError("martingale paths must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def replicas(self) -> int:
        return self.values.shape[0]


def _first_step(gamma1: np.ndarray, alpha: float) -> np.ndarray:
    # Γ_1^α - α γ_1 Γ_0^{α-1} with Γ_0 = 0: the linear term is γ_1 for α = 1
    # and is dropped otherwise (0 for α > 1, a singular 0^{α-1} for α < 1)
    if alpha == 1.0:
        return np.zeros_like(gamma1)
    return gamma1**alpha


def sample_martingale(alpha: float, n: int, replicas: int, seed=0, d: int = 1, j: int = 0) -> MartingaleSample:
    if n < 1 or replicas < 1:
        raise ValueError("need n >= 1 and replicas >= 1")
    if not 0 <= j < d:
        raise ValueError("coordinate index j out of range")
    rng = make_rng(seed)
    spacings = rng.standard_exponential((replicas, n))
    arrivals = np.cumsum(spacings, axis=1)
    coords = UniformSphere().draw(rng, replicas * n, d)[:, j].reshape(replicas, n)
    terms = np.empty((replicas, n))
    terms[:, 0] = _first_step(arrivals[:, 0], alpha)
    terms[:, 1:] = _linearization_error(arrivals[:, :-1], spacings[:, 1:], alpha)
    values = np.zeros((replicas, n + 1))
    np.cumsum(coords * terms, axis=1, out=values[:, 1:])
    return MartingaleSample(alpha, n, values, j, arrivals, seed=seed)


def corrupt_drift(sample: MartingaleSample, drift: float) -> MartingaleSample:
    """Negative control: add a decreasing deterministic drift.

    ``A_k + drift * s * (n - k) / (n - 1)`` for ``k >= 1``, where ``s`` is the
    standard deviation of ``A_n`` (1 if that is 0). The result is a strict
    supermartingale whose early values dwarf ``A_n``; ``drift`` above 2
    already breaks the maximal inequality ``E max A^2 <= 4 E A_n^2``.
    """
    n = sample.n
    scale = float(sample.values[:, -1].std(ddof=1)) if sample.replicas > 1 else 0.0
    scale = scale if scale > 0 else 1.0
    k = np.arange(n + 1, dtype=float)
    shift = drift * scale * (n - k) / max(n - 1, 1)
    shift[0] = 0.0
    return MartingaleSample(
        sample.alpha, n, sample.values + shift, sample.j, sample.arrivals, sample.seed, drift
    )


def default_lambdas(sample: MartingaleSample, quantiles=(0.5, 0.9, 0.99)) -> list[float]:
    peak = np.abs(sample.values).max(axis=1)
    lams = [float(q) for q in np.quantile(peak, quantiles) if q > 0]
    return lams or [1.0]


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def check_doob(sample: MartingaleSample, lam=None, p: float = 2.0, z: float = 3.0) -> CheckReport:
    """Empirical Doob inequalities at one or several levels ``lam``.

    For every level: ``lam^p P(max|A_k| >= lam) <= E|A_n|^p``; and for
    ``p > 1``: ``E max|A_k|^p <= (p/(p-1))^p E|A_n|^p``. Each is tested on
    per-replica differences, passing if the mean difference is at most
    ``z`` standard errors above 0.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    t0 = time.perf_counter()
    lams = default_lambdas(sample) if lam is None else np.atleast_1d(np.asarray(lam, dtype=float)).tolist()
    if any(l <= 0 for l in lams):
        raise ValueError("lambda must be positive")
    peak = np.abs(sample.values).max(axis=1)
    terminal = np.abs(sample.values[:, -1]) ** p

    per_level = []
    slacks = []
    for l in lams:
        gap = l**p * (peak >= l) - terminal
        mean, se = _mean_se(gap)
        slacks.append(z * se - mean)
        per_level.append({
            "lambda": l,
            "lhs": float(l**p * (peak >= l).mean()),
            "rhs": float(terminal.mean()),
            "mean_gap": mean,
            "se": se,
            "holds": mean <= z * se,
        })
    maximal = None
    if p > 1:
        gap = peak**p - (p / (p - 1)) ** p * terminal
        mean, se = _mean_se(gap)
        slacks.append(z * se - mean)
        maximal = {
            "lhs": float((peak**p).mean()),
            "rhs": float((p / (p - 1)) ** p * terminal.mean()),
            "mean_gap": mean,
            "se": se,
            "holds": mean <= z * se,
        }
    slack = min(slacks)
    return CheckReport(
        name="doob",
        params={"alpha": sample.alpha, "n": sample.n, "p": p, "lambdas": lams, "z": z, "drift": sample.drift},
        stat={"levels": per_level, "maximal_moment": maximal},
        bound="E|A_n|^p (+ z se)",
        slack=slack,
        verdict=bool(slack >= 0),
        replicas=sample.replicas,
        seeds=[sample.seed],
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


def check_martingale_increments(sample: MartingaleSample, ks=(2, 10, 50, 200), bins: int = 10, z: float = 4.0) -> CheckReport:
    """Conditional increment means ``E[A_k - A_{k-1} | Γ_{k-1}]`` vanish.

    Increments at each ``k`` are grouped by quantile bins of ``Γ_{k-1}``;
    every bin mean must lie within ``z`` standard errors of 0.
    """
    if sample.arrivals is None:
        raise ValueError("sample carries no arrivals to condition on")
    t0 = time.perf_counter()
    ks = [int(k) for k in ks if 2 <= k <= sample.n]
    if not ks:
        raise ValueError("no usable k (need 2 <= k <= n)")
    worst = -math.inf
    table = []
    for k in ks:
        inc = sample.values[:, k] - sample.values[:, k - 1]
        cond = sample.arrivals[:, k - 2]
        edges = np.quantile(cond, np.linspace(0, 1, bins + 1))
        label = np.clip(np.searchsorted(edges, cond, side="right") - 1, 0, bins - 1)
        for b in range(bins):
            x = inc[label == b]
            if x.size < 2:
                continue
            mean, se = _mean_se(x)
            score = abs(mean) / se if se > 0 else (0.0 if mean == 0 else math.inf)
            worst = max(worst, score)
            table.append({"k": k, "bin": b, "mean": mean, "se": se, "z": score})
    return CheckReport(
        name="martingale_increments",
        params={"alpha": sample.alpha, "n": sample.n, "ks": ks, "bins": bins, "z": z, "drift": sample.drift},
        stat={"bins": table, "max_z": worst},
        bound=z,
        slack=z - worst,
        verdict=bool(worst <= z),
        replicas=sample.replicas,
        seeds=[sample.seed],
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )
