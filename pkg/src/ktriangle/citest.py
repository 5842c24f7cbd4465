"""Conditional-independence tests with a sample-size-indexed threshold.

Both tests return a :class:`CiDecision`; ``independent`` is a pure function
of the reported statistic and threshold.  Discrete columns enter the binned
test as raw contingency frequencies, continuous [0,1] columns are binned
on a per-axis grid that refines with n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from .scm import ContinuousSmoothModel, DiscreteModel, LinearGaussianModel
from .scm.dataset import CONTINUOUS, DISCRETE, REAL, Dataset
from .scm.tabular import epsilon_from_table

# frozen by scripts/calibrate_threshold.py on held-out generator seeds; raw
# contingency tables and binned continuous data have very different null bias
DEFAULT_C = 0.115
DEFAULT_C_CONTINUOUS = 0.5
MIN_SAMPLES = 50
MAX_CONTINUOUS_COND = 3


class CiTestError(ValueError):
    pass


@dataclass(frozen=True)
class CiDecision:
    independent: bool
    statistic: float
    threshold: float
    n: int

    @classmethod
    def decide(cls, statistic: float, threshold: float, n: int) -> "CiDecision":
        # ties go to independence
        return cls(bool(statistic <= threshold), float(statistic), float(threshold), int(n))


@dataclass(frozen=True)
class TestSchedule:
    """threshold(n, d) = c (log n / n)^(1/(2+d)), with d = 2 + |cond|."""

    c: float = DEFAULT_C
    min_n: int = MIN_SAMPLES

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("schedule multiplier must be positive")

    def threshold(self, n: int, d: int) -> float:
        if n < 2:
            raise CiTestError("threshold undefined for n < 2")
        return self.c * (math.log(n) / n) ** (1.0 / (2 + d))


def default_schedule(data: Dataset) -> TestSchedule:
    """DEFAULT_C on all-discrete data, DEFAULT_C_CONTINUOUS once any column is binned."""
    return TestSchedule(DEFAULT_C if data.is_discrete(None) else DEFAULT_C_CONTINUOUS)


def bins_per_axis(n: int, d: int) -> int:
    """Per-axis bin count (n / log n)^(1/(2+d)), at least one."""
    if n < 3:
        return 1
    return max(1, int(round((n / math.log(n)) ** (1.0 / (2 + d)))))


def _codes(data: Dataset, cols: list[int], n_bins: int) -> tuple[list[np.ndarray], list[int]]:
    codes, sizes = [], []
    for j in cols:
        spec = data.schema[j]
        col = data.values[:, j]
        if spec.kind == DISCRETE:
            codes.append(col.astype(np.int64))
            sizes.append(spec.cardinality)
        elif spec.kind == CONTINUOUS:
            # right-closed final bin
            codes.append(np.minimum((col * n_bins).astype(np.int64), n_bins - 1))
            sizes.append(n_bins)
        else:
            raise CiTestError(f"column {spec.name} is real-valued; use the Fisher-z test")
    return codes, sizes


def contingency(data: Dataset, cols: list[int], n_bins: int) -> np.ndarray:
    """Relative-frequency table over ``cols`` (continuous columns binned)."""
    codes, sizes = _codes(data, cols, n_bins)
    flat = np.ravel_multi_index(codes, sizes) if codes else np.zeros(data.n, dtype=np.int64)
    counts = np.bincount(flat, minlength=int(np.prod(sizes)))
    return counts.reshape(sizes) / data.n


def epsilon_hat(data: Dataset, x: int, y: int, cond: Iterable[int] = ()) -> float:
    """Plug-in estimate of the L1 dependence from (binned) frequencies."""
    cond = sorted(cond)
    cols = [x, y] + cond
    d = 2 + len(cond)
    return epsilon_from_table(contingency(data, cols, bins_per_axis(data.n, d)))


def ci_test_binned(data: Dataset, x: int, y: int, cond: Iterable[int] = (),
                   schedule: TestSchedule | None = None) -> CiDecision:
    schedule = schedule or default_schedule(data)
    cond = sorted(set(cond))
    if x == y or x in cond or y in cond:
        raise CiTestError("x, y must be distinct and outside the conditioning set")
    if data.n < schedule.min_n:
        raise CiTestError(f"need at least {schedule.min_n} samples, got {data.n}")
    if not data.is_discrete(cond) and len(cond) > MAX_CONTINUOUS_COND:
        raise CiTestError(f"continuous conditioning sets are limited to {MAX_CONTINUOUS_COND} variables")
    stat = epsilon_hat(data, x, y, cond)
    return CiDecision.decide(stat, schedule.threshold(data.n, 2 + len(cond)), data.n)


def default_alpha(n: int) -> float:
    """Level shrinking with n: min(0.05, 1/sqrt(n))."""
    return min(0.05, 1.0 / math.sqrt(n))


def sample_partial_correlation(values: np.ndarray, x: int, y: int, cond: list[int]) -> float:
    """Correlation of the residuals of x and y after least squares on cond."""
    Z = np.column_stack([np.ones(len(values))] + [values[:, c] for c in cond])
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise CiTestError("singular sample covariance of the conditioning set")
    xy = values[:, [x, y]]
    resid = xy - Z @ np.linalg.lstsq(Z, xy, rcond=None)[0]
    sx, sy = np.sqrt((resid ** 2).sum(axis=0))
    scale = np.abs(xy - xy.mean(axis=0)).max(axis=0)
    if sx <= 1e-12 * max(scale[0], 1e-300) * len(values) or sy <= 1e-12 * max(scale[1], 1e-300) * len(values):
        raise CiTestError("a tested variable is a linear function of the conditioning set")
    return float(resid[:, 0] @ resid[:, 1] / (sx * sy))


def ci_test_fisher_z(data: Dataset, x: int, y: int, cond: Iterable[int] = (),
                     alpha_schedule: Callable[[int], float] = default_alpha) -> CiDecision:
    """Statistic sqrt(n - |S| - 3) |atanh r| against the two-sided normal quantile."""
    cond = sorted(set(cond))
    n = data.n
    if n <= len(cond) + 3:
        raise CiTestError("need n > |cond| + 3 for the Fisher-z test")
    r = sample_partial_correlation(data.values.astype(float), x, y, cond)
    r = min(max(r, -1.0 + 1e-15), 1.0 - 1e-15)
    stat = math.sqrt(n - len(cond) - 3) * abs(math.atanh(r))
    alpha = alpha_schedule(n)
    return CiDecision.decide(stat, float(stats.norm.ppf(1.0 - alpha / 2.0)), n)


# ----------------------------------------------------------------------------


def population_ci_oracle(m, tol: float | None = None) -> Callable[[int, int, Iterable[int]], bool]:
    """Infinite-sample CI answers: independent iff the exact dependence is zero."""
    if isinstance(m, LinearGaussianModel):
        tol = 1e-10 if tol is None else tol
        return lambda x, y, cond=(): abs(m.partial_correlation(x, y, sorted(cond))) <= tol
    if isinstance(m, DiscreteModel):
        tol = 1e-9 if tol is None else tol
    elif isinstance(m, ContinuousSmoothModel):
        tol = 1e-4 if tol is None else tol
    else:
        raise TypeError(f"no oracle for {type(m).__name__}")
    net = m.network
    net = net() if callable(net) else net
    return lambda x, y, cond=(): net.epsilon(x, y, sorted(cond)) <= tol


class DataCI:
    """Adapts a dataset to the ``ci(x, y, cond)`` decision-source protocol."""

    def __init__(self, data: Dataset, schedule: TestSchedule | None = None,
                 alpha_schedule: Callable[[int], float] = default_alpha):
        self.data = data
        self.schedule = schedule or default_schedule(data)
        self.alpha_schedule = alpha_schedule
        self.gaussian = any(k == REAL for k in data.kinds)

    def __call__(self, x: int, y: int, cond: Iterable[int] = ()) -> CiDecision:
        if self.gaussian:
            return ci_test_fisher_z(self.data, x, y, cond, self.alpha_schedule)
        return ci_test_binned(self.data, x, y, cond, self.schedule)
