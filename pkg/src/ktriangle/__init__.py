"""Causal discovery and edge estimation that stay uniformly consistent under
k-Triangle-Faithfulness, TV smoothness and a positivity floor."""

__version__ = "0.1.0"

from .graph import Dag, MixedGraph, Pattern, d_separated, markov_equivalent, pattern_of  # noqa: E402
from .discovery import ErrorKind, classify_error, vcsgs  # noqa: E402
from .citest import DataCI, TestSchedule, ci_test_binned, ci_test_fisher_z, population_ci_oracle  # noqa: E402
from .estimation import conditional_probability_distance, edge_estimation  # noqa: E402
from .scm import random_model  # noqa: E402

__all__ = [
    "Dag", "DataCI", "ErrorKind", "MixedGraph", "Pattern", "TestSchedule", "ci_test_binned",
    "ci_test_fisher_z", "classify_error", "conditional_probability_distance", "d_separated",
    "edge_estimation", "markov_equivalent", "pattern_of", "population_ci_oracle", "random_model", "vcsgs",
]
