"""Empirical Wasserstein distances between path samples under the sup-metric.

Both samples are uniform empirical measures, so an optimal coupling solves
a transportation problem with uniform marginals:

* equal sizes: linear assignment (shortest augmenting path, via SciPy);
* unequal sizes: the transportation LP, solved to a vertex by dual simplex;
* large samples: log-stabilized Sinkhorn scaling, rounded onto the
  feasible set so its plan cost upper-bounds the exact optimum.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .paths import PathSample, pairwise_sup_distance

__all__ = [
    "CostMatrix",
    "TransportPlan",
    "WassersteinEstimate",
    "cost_matrix",
    "solve_exact",
    "brute_force_plan",
    "solve_entropic",
    "empirical_wasserstein",
    "BRUTE_FORCE_MAX",
]

BRUTE_FORCE_MAX = 8


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Entries ``d(x_i, y_j)^p``."""

    entries: np.ndarray
    p: float = 1.0

    def __post_init__(self):
        c = np.array(self.entries, dtype=float)
        if c.ndim != 2 or 0 in c.shape:
            raise ValueError("cost matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("costs must be finite and non-negative")
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class TransportPlan:
    coupling: np.ndarray

    @property
    def marginal_violation(self) -> float:
        m, k = self.coupling.shape
        return float(max(
            np.abs(self.coupling.sum(axis=1) - 1.0 / m).max(),
            np.abs(self.coupling.sum(axis=0) - 1.0 / k).max(),
        ))

    def cost(self, cost: CostMatrix) -> float:
        # correctly rounded, so transposed problems agree to the last bit
        return math.fsum((self.coupling * cost.entries).ravel())

    def triples(self, atol: float = 0.0):
        """Non-zero entries as ``(i, j, mass)``."""
        ii, jj = np.nonzero(self.coupling > atol)
        return [(int(i), int(j), float(self.coupling[i, j])) for i, j in zip(ii, jj)]


@dataclass(frozen=True, eq=False)
class WassersteinEstimate:
    value: float
    p: float
    solver: str
    plan: TransportPlan
    info: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.plan.coupling.shape

    def to_dict(self, seed_meta=None) -> dict:
        m_a, m_b = self.shape
        return {
            "value": self.value,
            "p": self.p,
            "solver": self.solver,
            "m_A": m_a,
            "m_B": m_b,
            "seed_meta": seed_meta,
        }


def cost_matrix(A: PathSample, B: PathSample, p: float = 1.0) -> CostMatrix:
    if A.d != B.d:
        raise ValueError(f"dimension mismatch: {A.d} vs {B.d}")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    dist = pairwise_sup_distance(A.paths, B.paths)
    return CostMatrix(dist**p, p)


def _estimate(cost: CostMatrix, coupling: np.ndarray, solver: str, **info) -> WassersteinEstimate:
    plan = TransportPlan(coupling)
    total = max(plan.cost(cost), 0.0)
    return WassersteinEstimate(total ** (1.0 / cost.p), cost.p, solver, plan, info)


def _permutation_plan(m: int, cols) -> np.ndarray:
    coupling = np.zeros((m, m))
    coupling[np.arange(m), cols] = 1.0 / m
    return coupling


def solve_exact(cost: CostMatrix) -> WassersteinEstimate:
    c = cost.entries
    m, k = c.shape
    if m == k:
        rows, cols = linear_sum_assignment(c)
        return _estimate(cost, _permutation_plan(m, cols[np.argsort(rows)]), "exact-assignment")

    # transportation LP: x_ij >= 0, rows sum to 1/m, columns to 1/k
    a_eq = np.zeros((m + k, m * k))
    for i in range(m):
        a_eq[i, i * k:(i + 1) * k] = 1.0
    for j in range(k):
        a_eq[m + j, j::k] = 1.0
    b_eq = np.concatenate((np.full(m, 1.0 / m), np.full(k, 1.0 / k)))
    res = linprog(
        c.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"min-cost flow failed: {res.message}")
    coupling = np.clip(res.x.reshape(m, k), 0.0, None)
    return _estimate(cost, coupling, "min-cost-flow")


def brute_force_plan(cost: CostMatrix) -> WassersteinEstimate:
    """Minimum over all permutations; oracle for small square problems."""
    c = cost.entries
    m, k = c.shape
    if m != k:
        raise ValueError("brute force needs a square cost matrix")
    if m > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to size <= {BRUTE_FORCE_MAX}, got {m}")
    perms = np.array(list(itertools.permutations(range(m))))
    totals = c[np.arange(m), perms].sum(axis=1)
    # argmin returns the first minimum: lexicographically smallest permutation
    best = perms[int(np.argmin(totals))]
    return _estimate(cost, _permutation_plan(m, best), "brute-force")


def _round_to_feasible(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project an approximate plan onto the transport polytope.

    Scale rows then columns down to their targets and spread the remaining
    mass as a rank-one correction (Altschuler, Weed & Rigollet 2017).
    """
    P = P * np.minimum(a / np.maximum(P.sum(axis=1), 1e-300), 1.0)[:, None]
    P = P * np.minimum(b / np.maximum(P.sum(axis=0), 1e-300), 1.0)[None, :]
    err_a = a - P.sum(axis=1)
    err_b = b - P.sum(axis=0)
    mass = err_a.sum()
    if mass > 0:
        P = P + np.outer(err_a, err_b) / mass
    return P


def solve_entropic(cost: CostMatrix, eta: float, max_iters: int = 200_000, tol: float = 1e-5) -> WassersteinEstimate:
    """Entropic OT by Sinkhorn scaling with ε-annealing and dual absorption.

    The scaling vectors live on a kernel rebuilt from the log-domain duals
    ``(f, g)`` whenever they grow large, so ``eta`` far below the cost
    range does not underflow. Iteration stops once the L1 row-marginal
    violation drops below ``tol``; the plan is then rounded onto the exact
    marginals and its (unregularized) transport cost is reported.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    c = cost.entries
    m, k = c.shape
    a = np.full(m, 1.0 / m)
    b = np.full(k, 1.0 / k)
    f = np.zeros(m)
    g = np.zeros(k)
    eps = max(float(c.max()), eta)
    iters = 0
    violation = np.inf
    while True:
        eps = max(eps / 4.0, eta)
        final = eps == eta
        kernel = np.exp((f[:, None] + g[None, :] - c) / eps)
        u = np.ones(m)
        v = np.ones(k)
        target = tol if final else 1e-3
        while iters < max_iters:
            iters += 1
            u = a / np.maximum(kernel @ v, 1e-300)
            v = b / np.maximum(kernel.T @ u, 1e-300)
            if u.max() > 1e100 or v.max() > 1e100:
                f += eps * np.log(u)
                g += eps * np.log(v)
                kernel = np.exp((f[:, None] + g[None, :] - c) / eps)
                u[:] = 1.0
                v[:] = 1.0
            if iters % 10 == 0:
                violation = float(np.abs(u * (kernel @ v) - a).sum())
                if violation < target:
                    break
        f += eps * np.log(u)
        g += eps * np.log(v)
        if final or iters >= max_iters:
            break

    converged = final and violation < tol
    if not converged:
        warnings.warn(
            f"Sinkhorn did not converge in {max_iters} iterations (marginal violation {violation:.3e})",
            RuntimeWarning,
        )
    plan = np.exp((f[:, None] + g[None, :] - c) / eps)
    plan = _round_to_feasible(plan, a, b)
    return _estimate(
        cost, plan, f"entropic(eta={eta:g}, iterations={iters})",
        eta=eta, iterations=iters, violation=violation, converged=converged,
    )


def empirical_wasserstein(A: PathSample, B: PathSample, p: float = 1.0, method: str = "exact", **solver_kw) -> WassersteinEstimate:
    """``W_p`` between the empirical measures of two path samples.

    ``method`` is ``"exact"``, ``"brute"`` or ``"entropic"``; for the
    latter, ``eta`` defaults to ``1e-3`` times the largest cost.
    """
    cost = cost_matrix(A, B, p)
    if method == "exact":
        return solve_exact(cost)
    if method == "brute":
        return brute_force_plan(cost)
    if method == "entropic":
        eta = solver_kw.pop("eta", None)
        if eta is None:
            eta = 1e-3 * max(float(cost.entries.max()), math.ulp(1.0))
        return solve_entropic(cost, eta, **solver_kw)
    raise ValueError(f"unknown method {method!r}")
