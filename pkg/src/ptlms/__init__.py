"""Proportionate-type LMS adaptive filters: simulation and convergence theory."""

__version__ = "0.1.0"

from .filters import (DivergenceError, FilterState, SystemSpec, filter_error,
                      run_identification, simulate_batch, step)
from .gains import GainRule, Variant, activation, gain_vector
from .harness import (ExperimentConfig, LearningCurve, SweepRow, empirical_steady_state_msd,
                      generate_sparse_system, run_ensemble, sweep_mu)
from .theory import (InstabilityError, TheoryModel, build_f_matrix, build_pi,
                     estimate_gain_moments, mean_recursion_matrix, mean_stability_bound,
                     ms_stability_range, noise_gamma, steady_state_msd, transient_curve)

__all__ = [
    "DivergenceError", "FilterState", "SystemSpec", "filter_error", "run_identification",
    "simulate_batch", "step", "GainRule", "Variant", "activation", "gain_vector",
    "ExperimentConfig", "LearningCurve", "SweepRow", "empirical_steady_state_msd",
    "generate_sparse_system", "run_ensemble", "sweep_mu", "InstabilityError", "TheoryModel",
    "build_f_matrix", "build_pi", "estimate_gain_moments", "mean_recursion_matrix",
    "mean_stability_bound", "ms_stability_range", "noise_gamma", "steady_state_msd",
    "transient_curve",
]
