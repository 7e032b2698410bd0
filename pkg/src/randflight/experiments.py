"""Convergence and tail tables for ``W_p(μ_{X_n}, μ_Y)``.

Seeds follow one splitting rule throughout: the ``i``-th path of a sample
with seed ``s`` uses ``derive_seed(s, i)``; a convergence cell
``(n_index, repeat)`` draws its flight, limit and baseline samples from
``derive_seed(seed, role, n_index, repeat)`` with ``role`` 0, 1, 2.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .flights import RegimeConfig, build_flight
from .limits import DEFAULT_GRID, DEFAULT_TOL, sample_limit
from .paths import PathSample
from .stochastic import derive_seed
from .transport import empirical_wasserstein
from .verification.tails import BOUNDED_VARIANTS, estimate_tail_functional

__all__ = [
    "sample_flights",
    "sample_limits",
    "ConvergenceTable",
    "run_convergence",
    "TailTable",
    "run_tail_table",
]

_FLIGHT, _LIMIT, _BASELINE = 0, 1, 2


def sample_flights(regime: RegimeConfig, n: int, m: int, d: int = 1, seed=0, representation: str | None = None) -> PathSample:
    kw = {} if representation is None else {"representation": representation}
    paths = [build_flight(regime, n, d, derive_seed(seed, i), **kw).path for i in range(m)]
    meta = {"kind": "flight", "regime": regime.to_dict(), "n": n, "d": d, "seed": int(seed)}
    if representation is not None:
        meta["representation"] = representation
    return PathSample(paths, meta)


def sample_limits(regime: RegimeConfig, m: int, d: int = 1, seed=0, *, M: int = DEFAULT_GRID,
                  tol: float = DEFAULT_TOL, cov=None) -> PathSample:
    paths = [sample_limit(regime, d, derive_seed(seed, i), M=M, tol=tol, cov=cov) for i in range(m)]
    meta = {"kind": "limit", "regime": regime.to_dict(), "n": None, "d": d, "seed": int(seed)}
    return PathSample(paths, meta)


@dataclass
class ConvergenceTable:
    regime: dict
    p: float
    m: int
    records: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    CSV_COLUMNS = ("regime", "p", "n", "m", "repeat", "w_p", "baseline", "runtime_ms")

    def n_grid(self) -> list[int]:
        return sorted({r["n"] for r in self.records})

    def rows(self) -> list[dict]:
        """Per-``n`` summary: means and sample standard deviations over repeats."""
        out = []
        for n in self.n_grid():
            cell = [r for r in self.records if r["n"] == n]
            w = np.array([r["w_p"] for r in cell])
            b = np.array([r["baseline"] for r in cell])
            ddof = 1 if len(cell) > 1 else 0
            out.append({
                "n": n,
                "m": self.m,
                "w_p": float(w.mean()),
                "baseline": float(b.mean()),
                "sd": float(w.std(ddof=ddof)),
                "baseline_sd": float(b.std(ddof=ddof)),
                "wall_ms": float(sum(r["runtime_ms"] for r in cell)),
            })
        return out

    def pooled_sd(self) -> float:
        """Root mean of the per-``n`` variances of both columns."""
        rows = self.rows()
        var = [r["sd"] ** 2 for r in rows] + [r["baseline_sd"] ** 2 for r in rows]
        return math.sqrt(float(np.mean(var)))

    def non_increasing(self, k: float = 1.0) -> bool:
        w = [r["w_p"] for r in self.rows()]
        sd = self.pooled_sd()
        return all(b <= a + k * sd for a, b in zip(w, w[1:]))

    def final_within_baseline(self, k: float = 3.0) -> bool:
        last = self.rows()[-1]
        return last["w_p"] <= last["baseline"] + k * self.pooled_sd()

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        name = self.regime["variant"]
        for r in self.records:
            writer.writerow([name, self.p, r["n"], self.m, r["repeat"], repr(r["w_p"]), repr(r["baseline"]),
                             round(r["runtime_ms"], 3)])

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "regime": self.regime,
            "p": self.p,
            "m": self.m,
            "records": self.records,
            "rows": self.rows(),
            "pooled_sd": self.pooled_sd(),
        }


def _convergence_cell(regime, p, n, ni, rep, m, d, seed, method, limit_kw):
    t0 = time.perf_counter()
    flights = sample_flights(regime, n, m, d, derive_seed(seed, _FLIGHT, ni, rep))
    limits = sample_limits(regime, m, d, derive_seed(seed, _LIMIT, ni, rep), **limit_kw)
    other = sample_limits(regime, m, d, derive_seed(seed, _BASELINE, ni, rep), **limit_kw)
    w = empirical_wasserstein(flights, limits, p, method)
    base = empirical_wasserstein(other, limits, p, method)
    return {
        "n": int(n),
        "repeat": rep,
        "w_p": w.value,
        "baseline": base.value,
        "runtime_ms": (time.perf_counter() - t0) * 1e3,
    }


def run_convergence(
    regime: RegimeConfig,
    p: float = 1.0,
    n_grid=(25, 100, 400),
    m: int = 200,
    repeats: int = 5,
    seed=0,
    *,
    d: int = 1,
    method: str = "exact",
    threads: int = 1,
    M: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    cov=None,
) -> ConvergenceTable:
    """``W_p`` between ``m`` flights and ``m`` limit paths for each ``n``.

    Every cell also computes the self-distance baseline: ``W_p`` between two
    independent ``m``-path samples of the limit law, the finite-sample floor
    the flight distance should settle onto.
    """
    n_grid = [int(n) for n in n_grid]
    if m < 1:
        raise ValueError("m must be >= 1")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n grid must be increasing")
    limit_kw = {"M": M, "tol": tol, "cov": cov}
    cells = [(n, ni, rep) for ni, n in enumerate(n_grid) for rep in range(repeats)]

    def work(cell):
        n, ni, rep = cell
        return _convergence_cell(regime, p, n, ni, rep, m, d, seed, method, limit_kw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, cells))
    else:
        records = [work(c) for c in cells]
    config = {
        "regime": regime.to_dict(), "p": p, "n_grid": n_grid, "m": m, "repeats": repeats,
        "seed": int(seed), "d": d, "method": method, "M": M, "tol": tol,
    }
    return ConvergenceTable(regime.to_dict(), p, m, records, config)


@dataclass
class TailTable:
    regime: dict
    p: float
    n_grid: list
    R_grid: list
    estimates: np.ndarray  # (len(n_grid), len(R_grid))
    std_errors: np.ndarray
    config: dict = field(default_factory=dict)

    def bounded_rows_zero(self) -> bool:
        """For unit-ball regimes every entry with ``R > 1`` must be exactly 0."""
        if self.regime["variant"] not in BOUNDED_VARIANTS:
            return True
        cols = np.asarray(self.R_grid) > 1
        return bool(np.all(self.estimates[:, cols] == 0.0))

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["regime", "p", "n", "R", "estimate", "se"])
        for a, n in enumerate(self.n_grid):
            for b, R in enumerate(self.R_grid):
                writer.writerow([self.regime["variant"], self.p, n, R, repr(float(self.estimates[a, b])),
                                 repr(float(self.std_errors[a, b]))])

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "regime": self.regime,
            "p": self.p,
            "n_grid": self.n_grid,
            "R_grid": self.R_grid,
            "estimates": self.estimates.tolist(),
            "std_errors": self.std_errors.tolist(),
        }


def run_tail_table(regime: RegimeConfig, p: float = 1.0, n_grid=(100, 400), R_grid=(1.25, 2.0, 4.0),
                   m: int = 500, seed=0, *, d: int = 1) -> TailTable:
    """Tail functional ``∫_{|x| >= R} |x|^p dμ_n`` over an ``(n, R)`` grid.

    One flight sample per ``n`` is shared across all ``R``, so each row is
    non-increasing in ``R`` exactly.
    """
    n_grid = [int(n) for n in n_grid]
    R_grid = [float(R) for R in R_grid]
    est = np.zeros((len(n_grid), len(R_grid)))
    se = np.zeros_like(est)
    for a, n in enumerate(n_grid):
        sample = sample_flights(regime, n, m, d, derive_seed(seed, a))
        for b, R in enumerate(R_grid):
            rep = estimate_tail_functional(sample, R, p)
            est[a, b] = rep.stat["estimate"]
            se[a, b] = rep.stat["se"]
    config = {"regime": regime.to_dict(), "p": p, "n_grid": n_grid, "R_grid": R_grid, "m": m, "seed": int(seed), "d": d}
    return TailTable(regime.to_dict(), p, n_grid, R_grid, est, se, config)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
