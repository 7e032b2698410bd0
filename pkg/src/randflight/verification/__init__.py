"""Numerical certification of the supporting lemmas, inequalities and tail bounds."""
from .lemmas import (
    check_corollary1,
    check_lemma1,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    check_lemma5,
    exact_increment_second_moment,
    lemma1_terms,
    power_increment,
)
from .martingale import (
    MartingaleSample,
    check_doob,
    check_martingale_increments,
    corrupt_drift,
    default_lambdas,
    sample_martingale,
)
from .report import CheckReport, envelope_bounded, loglog_slope
from .tails import check_dimension_reduction, estimate_decomposition_bounds, estimate_tail_functional

__all__ = [
    "CheckReport",
    "MartingaleSample",
    "check_corollary1",
    "check_dimension_reduction",
    "check_doob",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
    "check_lemma4",
    "check_lemma5",
    "check_martingale_increments",
    "corrupt_drift",
    "default_lambdas",
    "envelope_bounded",
    "estimate_decomposition_bounds",
    "estimate_tail_functional",
    "exact_increment_second_moment",
    "lemma1_terms",
    "loglog_slope",
    "power_increment",
    "sample_martingale",
]
