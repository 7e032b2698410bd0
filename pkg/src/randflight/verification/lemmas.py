"""Certification of the analytic lemmas behind the polynomial-regime proof.

Deterministic checks run in mpmath at ``DPS`` digits so that identities
such as ``Γ(k+1)/Γ(k) = k`` come out exactly. Monte Carlo checks compare
against closed forms at a fixed number of standard errors.
"""
from __future__ import annotations

import math
import time

import mpmath as mp
import numpy as np

from ..stochastic import exact_gamma_moment, make_rng
from .report import CheckReport, envelope_bounded, relative_margin

__all__ = [
    "lemma1_terms",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
    "check_lemma4",
    "exact_increment_second_moment",
    "power_increment",
    "check_lemma5",
    "check_corollary1",
]

DPS = 50
_FLOAT_LOG_MAX = 700.0


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1e3


def _binom(alpha, k):
    """Generalized binomial coefficient ``α(α-1)...(α-k+1)/k!``."""
    out = mp.mpf(1)
    for i in range(k):
        out *= (alpha - i) / (i + 1)
    return out


def lemma1_terms(x, h, alpha, m):
    """Remainder ``R(x, h)`` of the order-``m`` binomial expansion and its bound."""
    with mp.workdps(DPS):
        x, h, a = mp.mpf(x), mp.mpf(h), mp.mpf(alpha)
        series = mp.fsum(_binom(a, k) * h**k * x ** (a - k) for k in range(1, m + 1))
        rem = (x + h) ** a - x**a - series
        bound = abs(_binom(a, m + 1)) * h ** (m + 1) * max(x ** (a - m - 1), (x + h) ** (a - m - 1))
        scale = (x + h) ** a
        return rem, bound, scale


def check_lemma1(x: float = 1.0, h: float = 0.5, alpha: float = 1.5, m: int = 1) -> CheckReport:
    if not (x > 0 and h > 0 and alpha > 0 and m >= 1):
        raise ValueError("need x > 0, h > 0, alpha > 0, m >= 1")
    if alpha * math.log(x + h) > _FLOAT_LOG_MAX or (m + 1) * abs(math.log(h)) > _FLOAT_LOG_MAX:
        raise ValueError("(x + h)^alpha or h^(m+1) outside floating-point range")
    t0 = time.perf_counter()
    rem, bound, scale = lemma1_terms(x, h, alpha, m)
    # exact arithmetic up to DPS digits; allow the last few
    atol = scale * mp.mpf(10) ** (-(DPS - 10))
    ok = bool(abs(rem) <= bound + atol)
    slack = float(bound - abs(rem))
    if abs(slack) < atol:
        slack = 0.0
    tightness = float(abs(rem) / bound) if bound > 0 else 0.0
    return CheckReport(
        name="lemma1",
        params={"x": x, "h": h, "alpha": alpha, "m": m},
        stat={"remainder": float(rem), "tightness": tightness},
        bound=float(bound),
        slack=slack,
        verdict=ok,
        runtime_ms=_ms(t0),
    )


def _dyadic(lo: int, hi: int) -> np.ndarray:
    return 2 ** np.arange(lo, hi + 1)


def check_lemma2(alpha: float = 1.0, ks=None, order: float = 1.0, rtol: float = 0.25, stab_tol: float = 0.05) -> CheckReport:
    """``k^order |(1 + α/k)^k - e^α|`` stays bounded and settles."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    ks = _dyadic(4, 20) if ks is None else np.asarray(ks)
    t0 = time.perf_counter()
    kf = ks.astype(float)
    diff = np.exp(kf * np.log1p(alpha / kf)) - math.exp(alpha)
    scaled = kf**order * np.abs(diff)
    ok_env, head, tail, env_slack = envelope_bounded(scaled, rtol)
    if scaled[-2] > 0:
        drift = abs(scaled[-1] / scaled[-2] - 1.0)
    else:
        drift = 0.0 if scaled[-1] == 0 else math.inf
    ok = ok_env and drift <= stab_tol
    return CheckReport(
        name="lemma2",
        params={"alpha": alpha, "ks": ks, "order": order, "rtol": rtol},
        stat={
            "scaled_deviation": scaled,
            "last_step_drift": drift,
            "asymptotic_constant": math.exp(alpha) * alpha**2 / 2,
            "head_max": head,
            "tail_max": tail,
        },
        bound=(1 + rtol) * head,
        slack=min(relative_margin((1 + rtol) * head, tail), relative_margin(stab_tol, drift)),
        verdict=bool(ok),
        runtime_ms=_ms(t0),
    )


def check_lemma3(alpha: float = 0.5, ks=None, order: float = 1.0, rtol: float = 0.25) -> CheckReport:
    """``(Γ(k+α)/Γ(k) - k^α) / k^{α-order}`` stays bounded over the grid."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    ks = _dyadic(4, 14) if ks is None else np.asarray(ks)
    t0 = time.perf_counter()
    with mp.workdps(DPS):
        a = mp.mpf(alpha)
        norm = [(mp.rf(int(k), a) - mp.mpf(int(k)) ** a) / mp.mpf(int(k)) ** (a - order) for k in ks]
        norm = np.array([float(v) for v in norm])
    ok, head, tail, slack = envelope_bounded(norm, rtol)
    return CheckReport(
        name="lemma3",
        params={"alpha": alpha, "ks": ks, "order": order, "rtol": rtol},
        stat={
            "normalized_deviation": norm,
            "second_order_constant": alpha * (alpha - 1) / 2,
            "head_max": head,
            "tail_max": tail,
        },
        bound=(1 + rtol) * head,
        slack=slack,
        verdict=bool(ok),
        runtime_ms=_ms(t0),
    )


def check_lemma4(
    beta: float = -0.5,
    ks=None,
    order: float = 1.0,
    rtol: float = 0.25,
    mc_k: int = 50,
    mc_draws: int = 1_000_000,
    z_tol: float = 3.0,
    seed=0,
) -> CheckReport:
    """``E Γ_k^β = k^β + O(k^{β-1})`` from :func:`exact_gamma_moment`, plus one MC cross-check."""
    ks = _dyadic(4, 14) if ks is None else np.asarray(ks)
    if np.any(ks + beta <= 0) or mc_k + beta <= 0:
        raise ValueError("need k + beta > 0 on the whole grid")
    t0 = time.perf_counter()
    kf = ks.astype(float)
    exact = exact_gamma_moment(kf, beta)
    norm = (exact - kf**beta) / kf ** (beta - order)
    ok_env, head, tail, env_slack = envelope_bounded(norm, rtol)

    draws = make_rng(seed).standard_gamma(mc_k, size=mc_draws) ** beta
    mc_mean = float(draws.mean())
    mc_se = float(draws.std(ddof=1) / math.sqrt(mc_draws))
    target = exact_gamma_moment(mc_k, beta)
    z = abs(mc_mean - target) / mc_se if mc_se > 0 else (0.0 if mc_mean == target else math.inf)
    return CheckReport(
        name="lemma4",
        params={"beta": beta, "ks": ks, "order": order, "rtol": rtol, "mc_k": mc_k},
        stat={
            "normalized_deviation": norm,
            "head_max": head,
            "tail_max": tail,
            "mc_mean": mc_mean,
            "mc_se": mc_se,
            "exact_at_mc_k": target,
            "mc_z": z,
        },
        bound=(1 + rtol) * head,
        slack=min(relative_margin((1 + rtol) * head, tail), relative_margin(z_tol, z)),
        verdict=bool(ok_env and z <= z_tol),
        replicas=mc_draws,
        seeds=[seed],
        runtime_ms=_ms(t0),
    )


def exact_increment_second_moment(k: int, alpha: float):
    """``E (Γ_{k+1}^α - Γ_k^α)^2`` in closed form (mpmath value).

    With ``Γ_{k+1} = Γ_k + γ`` and ``E (x + γ)^α = e^x Γ(α+1, x)``,
    ``E Γ_k^α Γ_{k+1}^α = Γ(k+2α+1) / (Γ(k) (k+α))``, hence

        Γ(k+1+2α)/Γ(k+1) + Γ(k+2α)/Γ(k) - 2 Γ(k+2α+1)/(Γ(k)(k+α)).
    """
    with mp.workdps(DPS):
        kk, a = mp.mpf(k), mp.mpf(alpha)
        return mp.rf(kk + 1, 2 * a) + mp.rf(kk, 2 * a) - 2 * mp.rf(kk, 2 * a + 1) / (kk + a)


def power_increment(base, step, alpha: float):
    """``(base + step)^α - base^α`` without cancellation, for ``base > 0``."""
    return base**alpha * np.expm1(alpha * np.log1p(step / base))


def _linearization_error(base, step, alpha: float):
    """``(base+step)^α - base^α - α step base^{α-1}``; identically 0 for α in {0, 1}."""
    if alpha in (0.0, 1.0):
        return np.zeros_like(base)
    x = step / base
    return base**alpha * (np.expm1(alpha * np.log1p(x)) - alpha * x)


def check_lemma5(
    alpha: float = 0.8,
    ks=(25, 50, 100, 200, 400),
    replicas: int = 1_000_000,
    seed=0,
    z_tol: float = 4.0,
    rtol: float = 0.25,
) -> CheckReport:
    """Second moment and linearization remainder of ``Γ_{k+1}^α - Γ_k^α``.

    * MC estimates of ``E|Γ_{k+1}^α - Γ_k^α|^2`` agree with the closed form
      within ``z_tol`` standard errors at every ``k``;
    * ``(E|.|^2 - 2α²k^{2α-2}) / k^{2α-3}`` stays bounded (closed form);
    * the 0.99 quantile of ``|ρ_k| / k^{α-2}`` stays bounded (MC).
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    ks = np.asarray(ks)
    t0 = time.perf_counter()
    rng = make_rng(seed)
    est, se, exact, zs, q99 = [], [], [], [], []
    for k in ks:
        base = rng.standard_gamma(int(k), size=replicas)
        step = rng.standard_exponential(replicas)
        sq = power_increment(base, step, alpha) ** 2
        est.append(float(sq.mean()))
        se.append(float(sq.std(ddof=1) / math.sqrt(replicas)))
        exact.append(float(exact_increment_second_moment(int(k), alpha)))
        diff = abs(est[-1] - exact[-1])
        zs.append(diff / se[-1] if se[-1] > 0 else (0.0 if diff == 0 else math.inf))
        rho = _linearization_error(base, step, alpha)
        q99.append(float(np.quantile(np.abs(rho), 0.99) / float(k) ** (alpha - 2)))
    kf = ks.astype(float)
    lead = 2 * alpha**2 * kf ** (2 * alpha - 2)
    norm_dev = (np.array(exact) - lead) / kf ** (2 * alpha - 3)
    ok_dev, dev_head, dev_tail, _ = envelope_bounded(norm_dev, rtol)
    ok_rho, rho_head, rho_tail, _ = envelope_bounded(q99, rtol)
    dev_slack = relative_margin((1 + rtol) * dev_head, dev_tail)
    rho_slack = relative_margin((1 + rtol) * rho_head, rho_tail)
    max_z = max(zs)
    ok = ok_dev and ok_rho and max_z <= z_tol
    return CheckReport(
        name="lemma5",
        params={"alpha": alpha, "ks": ks, "z_tol": z_tol, "rtol": rtol},
        stat={
            "mc_second_moment": est,
            "mc_se": se,
            "exact_second_moment": exact,
            "leading_term": lead,
            "mc_z": zs,
            "normalized_deviation": norm_dev,
            "rho_q99_normalized": q99,
            "slack_deviation_envelope": dev_slack,
            "slack_rho_envelope": rho_slack,
        },
        bound={"z_tol": z_tol, "deviation_envelope": (1 + rtol) * dev_head, "rho_envelope": (1 + rtol) * rho_head},
        slack=min(relative_margin(z_tol, max_z), dev_slack, rho_slack),
        verdict=bool(ok),
        replicas=replicas,
        seeds=[seed],
        runtime_ms=_ms(t0),
    )


def check_corollary1(
    alpha: float = 1.5,
    n_grid=(100, 400, 1600),
    replicas: int = 2000,
    seed=0,
    z_tol: float = 4.0,
    rtol: float = 0.25,
    ratio_tol: float = 0.1,
) -> CheckReport:
    """``Σ_{k<n} E|Γ_{k+1}^α - Γ_k^α|^2 = 2α²/(2α-1) n^{2α-1} + O(n^{2α-2})``.

    The sum is estimated by Monte Carlo over whole arrival paths and
    compared with the exact sum of closed-form terms. The verdict needs
    (i) MC within ``z_tol`` standard errors of exact, (ii) the exact ratio to
    the leading term approaching 1 monotonically and the MC ratio within
    ``ratio_tol`` of 1 at the largest ``n``, and (iii) the remainder divided
    by ``n^{2α-2}`` staying bounded.
    """
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    n_grid = np.asarray(n_grid)
    if np.any(np.diff(n_grid) <= 0) or n_grid[0] < 2:
        raise ValueError("n grid must be increasing and start at >= 2")
    t0 = time.perf_counter()
    n_max = int(n_grid[-1])
    rng = make_rng(seed)
    spacings = rng.standard_exponential((replicas, n_max))
    arrivals = np.cumsum(spacings, axis=1)
    # column k-1 holds the k-th term, k = 1..n_max-1
    sq = power_increment(arrivals[:, :-1], spacings[:, 1:], alpha) ** 2
    partial = np.cumsum(sq, axis=1)

    terms = [exact_increment_second_moment(k, alpha) for k in range(1, n_max)]
    with mp.workdps(DPS):
        exact_partial = []
        acc = mp.mpf(0)
        for t in terms:
            acc += t
            exact_partial.append(acc)

    lead_c = 2 * alpha**2 / (2 * alpha - 1)
    mc, se, exact, zs, ratio_exact, ratio_mc, remainder = [], [], [], [], [], [], []
    for n in n_grid:
        per_path = partial[:, n - 2]
        mc.append(float(per_path.mean()))
        se.append(float(per_path.std(ddof=1) / math.sqrt(replicas)))
        with mp.workdps(DPS):
            s = exact_partial[n - 2]
            lead = lead_c * mp.mpf(int(n)) ** (2 * alpha - 1)
            exact.append(float(s))
            ratio_exact.append(float(s / lead))
            remainder.append(float((s - lead) / mp.mpf(int(n)) ** (2 * alpha - 2)))
        ratio_mc.append(mc[-1] / float(lead))
        zs.append(abs(mc[-1] - exact[-1]) / se[-1])

    err = np.abs(np.array(ratio_exact) - 1.0)
    monotone = bool(np.all(np.diff(err) < 0)) if np.any(err > 0) else True
    # smallest relative drop of the ratio error between grid points
    mono_slack = min(relative_margin(a, b) for a, b in zip(err, err[1:])) if np.any(err > 0) else 0.0
    drops = (err[:-1] / err[1:]).tolist() if np.all(err[1:] > 0) else []
    ok_rem, rem_head, rem_tail, _ = envelope_bounded(remainder, rtol)
    rem_slack = relative_margin((1 + rtol) * rem_head, rem_tail)
    final_gap = abs(ratio_mc[-1] - 1.0)
    max_z = max(zs)
    ok = max_z <= z_tol and monotone and final_gap <= ratio_tol and ok_rem
    return CheckReport(
        name="corollary1",
        params={"alpha": alpha, "n_grid": n_grid, "z_tol": z_tol, "rtol": rtol, "ratio_tol": ratio_tol},
        stat={
            "mc_sum": mc,
            "mc_se": se,
            "exact_sum": exact,
            "mc_z": zs,
            "ratio_exact": ratio_exact,
            "ratio_mc": ratio_mc,
            "error_drop_factors": drops,
            "ratio_error_monotone": monotone,
            "normalized_remainder": remainder,
            "slack_remainder_envelope": rem_slack,
        },
        bound={"z_tol": z_tol, "ratio_tol": ratio_tol},
        slack=min(
            relative_margin(z_tol, max_z),
            relative_margin(ratio_tol, final_gap),
            rem_slack,
            mono_slack,
        ),
        verdict=bool(ok),
        replicas=replicas,
        seeds=[seed],
        runtime_ms=_ms(t0),
    )
