"""Structural causal models, population queries and assumption validators."""

from __future__ import annotations

from typing import Union

from .checks import (CheckResult, GenerationFailedError, InfeasibleConstraintsError,
                     InvalidModelError)
from .continuous import ContinuousSmoothModel, SmoothConditional
from .dataset import CONTINUOUS, DISCRETE, REAL, Dataset, VariableSpec
from .discrete import DiscreteModel
from .gaussian import LinearGaussianModel, SingularCovarianceError, partial_correlation_from_cov
from .generate import ModelConstraints, random_dag, random_model, validate_model

CausalModel = Union[DiscreteModel, ContinuousSmoothModel, LinearGaussianModel]


def sample(m: CausalModel, n: int, seed: int) -> Dataset:
    return m.sample(n, seed)


def edge_strength(m: CausalModel, x: int, y: int) -> float:
    return m.edge_strength(x, y)


def epsilon_dependence(m: CausalModel, x: int, y: int, cond=()) -> float:
    """||p(x,y,A) - p(x|A) p(y|A) p(A)||_1."""
    if x == y:
        raise ValueError("x and y must differ")
    return m.epsilon(x, y, cond)


def partial_correlation(m: LinearGaussianModel, x: int, y: int, cond=()) -> float:
    return m.partial_correlation(x, y, cond)


def check_tv_smoothness(m: CausalModel, L: float) -> CheckResult:
    return m.check_tv(L)


def check_nz(m: CausalModel, T: float) -> CheckResult:
    if not 0 < T < 1:
        raise ValueError("T must lie in (0, 1)")
    return m.check_nz(T)


def check_k_triangle_faithfulness(m: CausalModel, k: float) -> CheckResult:
    if k <= 0:
        raise ValueError("k must be positive")
    return m.check_ktf(k)


def models_equal(a: CausalModel, b: CausalModel) -> bool:
    """Field-level equality (numpy tables compared exactly)."""
    import numpy as np

    if type(a) is not type(b) or a.dag != b.dag:
        return False
    if isinstance(a, DiscreteModel):
        return a.cardinalities == b.cardinalities and all(np.array_equal(x, y) for x, y in zip(a.cpts, b.cpts))
    if isinstance(a, ContinuousSmoothModel):
        return (a.conditionals == b.conditionals and a.smoothness_L == b.smoothness_L
                and a.floor_T == b.floor_T)
    return a.coefficients == b.coefficients and a.noise_variances == b.noise_variances


__all__ = [
    "CausalModel", "CheckResult", "ContinuousSmoothModel", "Dataset", "DiscreteModel",
    "GenerationFailedError", "InfeasibleConstraintsError", "InvalidModelError",
    "LinearGaussianModel", "ModelConstraints", "SingularCovarianceError", "SmoothConditional",
    "VariableSpec", "CONTINUOUS", "DISCRETE", "REAL",
    "check_k_triangle_faithfulness", "check_nz", "check_tv_smoothness", "edge_strength",
    "epsilon_dependence", "models_equal", "partial_correlation", "partial_correlation_from_cov",
    "random_dag", "random_model", "sample", "validate_model",
]
