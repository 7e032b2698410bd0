"""Random flights with Poisson switching moments and their path-space limits."""
from .experiments import ConvergenceTable, TailTable, run_convergence, run_tail_table, sample_flights, sample_limits
from .flights import (
    LOGF_PRESETS,
    Exponential,
    FlightRealization,
    Polynomial,
    SuperExponential,
    build_flight,
    regime_from_dict,
)
from .limits import sample_limit
from .paths import PathSample, Polyline, pairwise_sup_distance, sup_distance
from .stochastic import derive_seed, make_rng, sample_directions, sample_gamma_path
from .transport import brute_force_plan, cost_matrix, empirical_wasserstein, solve_entropic, solve_exact

__version__ = "0.1.0"
