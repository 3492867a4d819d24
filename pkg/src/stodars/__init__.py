"""Stochastic direct search in random subspaces.

Derivative-free minimization of noisy objectives: poll directions are built
from positive spanning sets in a random low-dimensional subspace, embedded
through the first columns of uniform random orthogonal matrices, and trial
points are accepted on a sufficient-decrease test over Monte-Carlo function
estimates with sample reuse.  Full-space baselines, geometry diagnostics,
and a data-profile benchmark harness are included.
"""

from .estimator import (AccuracyParams, EstimateCache, MonteCarloEstimator,
                        OracleEstimator, SampleSchedule, fresh_estimate,
                        oracle_estimator, promote_on_success,
                        refine_on_failure)
from .geometry import (DirectionSet, HaarOrthogonal, SubspaceFrame,
                       cosine_measure, cosine_measure_grid,
                       empirical_min_alignment, map_to_fullspace,
                       minimal_positive_basis, restricted_cosine_measure,
                       sample_frame, sample_haar_orthogonal, take_frame)
from .problems import (NoiseModel, NoisyProblem, SmoothProblem, default_suite,
                       get_instance, make_instance, make_smooth)
from .solver import (ConfigError, RunTrace, SolverConfig, run,
                     tau_upper_bound)
from .streams import stream

__all__ = [
    "AccuracyParams", "EstimateCache", "MonteCarloEstimator",
    "OracleEstimator", "SampleSchedule", "fresh_estimate", "oracle_estimator",
    "promote_on_success", "refine_on_failure",
    "DirectionSet", "HaarOrthogonal", "SubspaceFrame", "cosine_measure",
    "cosine_measure_grid", "empirical_min_alignment", "map_to_fullspace",
    "minimal_positive_basis", "restricted_cosine_measure", "sample_frame",
    "sample_haar_orthogonal", "take_frame",
    "NoiseModel", "NoisyProblem", "SmoothProblem", "default_suite",
    "get_instance", "make_instance", "make_smooth",
    "ConfigError", "RunTrace", "SolverConfig", "run", "tau_upper_bound",
    "stream",
]

__version__ = "0.1.0"
