import json
import math

import mpmath as mp
import numpy as np
import pytest

from randflight.verification import (
    check_corollary1,
    check_dimension_reduction,
    check_doob,
    check_lemma1,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    check_lemma5,
    check_martingale_increments,
    corrupt_drift,
    envelope_bounded,
    estimate_decomposition_bounds,
    exact_increment_second_moment,
    lemma1_terms,
    loglog_slope,
    power_increment,
    sample_martingale,
)
from randflight.verification import lemmas, tails
from randflight.verification.report import CheckReport, relative_margin

REPORT_KEYS = {"name", "params", "stat", "bound", "slack", "verdict", "replicas", "seeds", "runtime_ms"}


# -- helpers --------------------------------------------------------------


def test_envelope_and_slope_helpers():
    ok, head, tail, slack = envelope_bounded([1, 2, 1.5, 1.2])
    assert ok and head == 2 and tail == 1.5 and slack == pytest.approx(1.0)
    assert not envelope_bounded(np.arange(1, 9) ** 2)[0]
    assert loglog_slope([1, 2, 4], [1, 0.25, 1 / 16]) == pytest.approx(-2)
    assert loglog_slope([1, 2, 4], [0.5, 0, 0]) == -math.inf
    assert relative_margin(2.0, 1.0) == 0.5 and relative_margin(2.0, 3.0) == -0.5


def test_report_json_schema():
    r = check_lemma2()
    doc = json.loads(r.to_json())
    assert set(doc) == REPORT_KEYS
    assert isinstance(doc["verdict"], bool)
    bad = CheckReport("x", {}, {"v": math.inf}, None, -math.inf, False)
    assert json.loads(bad.to_json())["slack"] == "-inf"
    assert str(bad).startswith("[FAIL]")


# -- binomial remainder ------------------------------------------------------


def test_lemma1_default_has_positive_slack():
    r = check_lemma1(1.0, 0.5, 1.5, 1)
    assert r.verdict and r.slack > 0


@pytest.mark.parametrize("alpha,m", [(1, 1), (2, 2), (2, 3), (3, 5)])
def test_lemma1_integer_alpha_exact(alpha, m):
    rem, _, _ = lemma1_terms(1.3, 0.7, alpha, m)
    assert rem == 0
    assert check_lemma1(1.3, 0.7, alpha, m).verdict


def test_lemma1_remainder_against_taylor_oracle():
    # independent route: mpmath Taylor coefficients of (x+h)^α
    x, h, a, m = 2.0, 0.3, 0.7, 2
    with mp.workdps(50):
        coeffs = mp.taylor(lambda u: (mp.mpf(x) + u) ** a, 0, m)
        ref = (mp.mpf(x) + h) ** a - mp.fsum(c * mp.mpf(h) ** k for k, c in enumerate(coeffs))
        rem, _, _ = lemma1_terms(x, h, a, m)
        assert abs(rem - ref) < mp.mpf(10) ** -40


def test_lemma1_remainder_scales_like_h_power():
    ratios = []
    for h in (1e-1, 1e-2, 1e-3, 1e-4):
        rem, _, _ = lemma1_terms(1.0, h, 1.5, 1)
        ratios.append(float(abs(rem)) / h**2)
    assert max(ratios) <= 1.25 * ratios[-1]
    assert all(check_lemma1(1.0, h, 1.5, 1).verdict for h in (1e-1, 1e-4))


def test_lemma1_negative_control(monkeypatch):
    real = lemmas.lemma1_terms
    monkeypatch.setattr(lemmas, "lemma1_terms", lambda *a: (lambda r, b, s: (r, b / 10, s))(*real(*a)))
    r = check_lemma1()
    assert not r.verdict and r.slack < 0


def test_lemma1_domain():
    with pytest.raises(ValueError):
        check_lemma1(x=0.0)
    with pytest.raises(ValueError):
        check_lemma1(x=1e300, alpha=5)


# -- (1 + α/k)^k ----------------------------------------------------------------


def test_lemma2_alpha_zero():
    r = check_lemma2(alpha=0.0)
    assert np.all(np.asarray(r.stat["scaled_deviation"]) == 0)
    assert r.verdict


def test_lemma2_reference_values():
    assert abs((1 + 1 / 10) ** 10 - math.e) == pytest.approx(0.124539368, rel=1e-6)
    r = check_lemma2(alpha=1.0)
    assert r.verdict
    scaled = r.stat["scaled_deviation"]
    assert r.stat["last_step_drift"] <= 0.05
    assert scaled[-1] == pytest.approx(math.e / 2, rel=1e-3)


def test_lemma2_negative_control():
    assert not check_lemma2(alpha=1.0, order=2.0).verdict


# -- Γ(k+α)/Γ(k) ---------------------------------------------------------------


def test_lemma3_exact_cases():
    r = check_lemma3(alpha=1.0)
    assert r.verdict and r.slack == 0
    assert np.all(np.asarray(r.stat["normalized_deviation"]) == 0)
    r = check_lemma3(alpha=2.0)
    np.testing.assert_array_equal(r.stat["normalized_deviation"], 1.0)


def test_lemma3_second_order_constant():
    r = check_lemma3(alpha=0.5, ks=[16, 256, 10_000])
    assert abs(r.stat["normalized_deviation"][-1] - (-0.125)) <= 0.2 * 0.125
    assert r.verdict


def test_lemma3_negative_control():
    assert not check_lemma3(alpha=0.5, order=2.0).verdict


def test_lemma3_bitwise_reproducible():
    a, b = check_lemma3(alpha=0.3), check_lemma3(alpha=0.3)
    assert np.asarray(a.stat["normalized_deviation"]).tobytes() == np.asarray(b.stat["normalized_deviation"]).tobytes()


# -- E Γ_k^β -------------------------------------------------------------------


def test_lemma4_default():
    r = check_lemma4()
    assert r.verdict and r.stat["mc_z"] <= 3


def test_lemma4_beta_one_exact():
    r = check_lemma4(beta=1.0, ks=[10, 100, 1000, 10_000], mc_draws=10_000)
    np.testing.assert_allclose(r.stat["normalized_deviation"], 0.0, atol=1e-9)


def test_lemma4_negative_control():
    assert not check_lemma4(order=2.0, mc_draws=10_000).verdict


# -- increments of Γ^α ---------------------------------------------------------


def test_increment_moment_closed_form_alpha_one():
    for k in (1, 5, 100):
        assert exact_increment_second_moment(k, 1.0) == 2


def test_increment_moment_against_quadrature():
    # oracle: E(Γ_k + γ)^α(Γ_k)^α by two-dimensional numerical integration
    k, a = 3, 0.8
    with mp.workdps(30):
        dens = lambda x: x ** (k - 1) * mp.exp(-x) / mp.factorial(k - 1)
        inner = lambda x: mp.quad(lambda g: ((x + g) ** a - x**a) ** 2 * mp.exp(-g), [0, mp.inf])
        ref = mp.quad(lambda x: inner(x) * dens(x), [0, mp.inf])
        assert abs(exact_increment_second_moment(k, a) - ref) < mp.mpf(10) ** -20


def test_power_increment_no_cancellation():
    base = np.array([1e6])
    assert power_increment(base, np.array([1e-6]), 0.5)[0] == pytest.approx(0.5e-9, rel=1e-9)


def test_lemma5_default():
    r = check_lemma5()
    assert r.verdict and max(r.stat["mc_z"]) <= 4


def test_lemma5_alpha_one_exact():
    r = check_lemma5(alpha=1.0, replicas=20_000)
    np.testing.assert_array_equal(r.stat["exact_second_moment"], 2.0)
    np.testing.assert_array_equal(r.stat["normalized_deviation"], 0.0)
    np.testing.assert_array_equal(r.stat["rho_q99_normalized"], 0.0)


def test_lemma5_negative_control(monkeypatch):
    real = lemmas.exact_increment_second_moment
    monkeypatch.setattr(lemmas, "exact_increment_second_moment", lambda k, a: real(k, a) * 1.01)
    r = check_lemma5(replicas=200_000)
    assert not r.verdict and r.slack < 0


# -- partial sums --------------------------------------------------------------


def test_corollary1_alpha_one_exact():
    r = check_corollary1(alpha=1.0, replicas=500)
    for n, s in zip((100, 400, 1600), r.stat["exact_sum"]):
        assert s == 2 * (n - 1)


def test_corollary1_default():
    r = check_corollary1()
    assert r.verdict and r.slack > 0
    assert all(3.0 <= f <= 5.0 for f in r.stat["error_drop_factors"])


def test_corollary1_flags_slow_remainder_for_small_alpha():
    # for 1/2 < α < 1 the remainder is O(1), not O(n^{2α-2}); the check says so
    r = check_corollary1(alpha=0.75)
    assert not r.verdict
    assert r.stat["ratio_exact"][0] < 0.9
    assert all(f < 3.0 for f in r.stat["error_drop_factors"])


# -- martingale and Doob ---------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.75, 1.0, 1.5])
def test_martingale_increments_centered(alpha):
    s = sample_martingale(alpha, 200, 20_000, seed=3)
    assert check_martingale_increments(s).verdict


def test_martingale_negative_control():
    s = corrupt_drift(sample_martingale(1.5, 200, 20_000, seed=3), 3.0)
    assert not check_martingale_increments(s).verdict


def test_doob_examples():
    s = sample_martingale(1.0, 100, 10_000, seed=0)
    assert check_doob(s, lam=1.0, p=2).verdict
    s = sample_martingale(1.5, 100, 10_000, seed=0)
    huge = check_doob(s, lam=1e9)
    assert huge.verdict and huge.stat["levels"][0]["lhs"] == 0
    assert check_doob(s, p=2).verdict


def test_doob_negative_control():
    s = sample_martingale(1.5, 200, 10_000, seed=0)
    r = check_doob(corrupt_drift(s, 3.0), lam=None)
    assert not r.verdict
    assert any(not lev["holds"] for lev in r.stat["levels"]) or not r.stat["maximal_moment"]["holds"]


# -- decomposition and dimension reduction ---------------------------------------


def test_decomposition_default():
    r = estimate_decomposition_bounds(alpha=1.0, n=500, R_grid=(1, 2, 4))
    assert r.verdict
    assert all(row["split_holds"] for row in r.stat["rows"])
    assert max(r.stat["fitted_exponents"].values()) <= -2


@pytest.mark.parametrize("alpha", [0.75, 1.5])
def test_decomposition_other_alphas(alpha):
    r = estimate_decomposition_bounds(alpha=alpha, n=300, replicas=5000)
    assert all(row["split_holds"] for row in r.stat["rows"])


def test_decomposition_far_tail_is_empty():
    r = estimate_decomposition_bounds(alpha=0.75, n=100, R_grid=(1e3, 2e3), replicas=1000)
    for row in r.stat["rows"]:
        assert row["I"] == row["II"] == row["III"] == 0


def test_decomposition_negative_control():
    assert not estimate_decomposition_bounds(max_exponent=-5.0).verdict


def test_dimension_reduction():
    assert check_dimension_reduction(d=1).verdict
    r = check_dimension_reduction(alpha=1.0, n=200, R=2.0, d=2, replicas=10_000)
    assert r.verdict
    rhs = [check_dimension_reduction(d=d, replicas=5000).stat["rhs"] for d in (1, 2, 3)]
    assert rhs[0] <= rhs[1] <= rhs[2]


def test_dimension_reduction_negative_control(monkeypatch):
    # the reduction needs Δ_i > 0; alternating signs break it
    real = tails._increments
    monkeypatch.setattr(tails, "_increments", lambda g, a, al: real(g, a, al) * np.where(np.arange(g.shape[1]) % 2, -1, 1))
    assert not check_dimension_reduction(d=1, R=0.5, replicas=5000).verdict


def test_tail_functional_requires_valid_inputs():
    from randflight.experiments import sample_flights
    from randflight.flights import Exponential

    s = sample_flights(Exponential(1.0), 20, 5, seed=0)
    with pytest.raises(ValueError):
        tails.estimate_tail_functional(s, 0.0)
