"""Histogram estimates, the edge estimation step and the conditional
probability distance.

Continuous axes live on [0, 1] and are cut into ``bins_per_axis`` equal bins
(final bin right-closed).  Discrete axes keep their states, with unit width,
so the same ``count / (n * volume)`` formula gives probabilities for them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .citest import bins_per_axis
from .discovery import VcsgsOutput, estimable_vertices
from .graph import MixedGraph
from .scm import ContinuousSmoothModel, DiscreteModel
from .scm.dataset import CONTINUOUS, DISCRETE, Dataset

DISTANCE_GRID = 9  # evaluation points per true-only continuous parent axis


class ParentSetMismatchError(ValueError):
    """Estimated parents are not a subset of the true parents."""


@dataclass(frozen=True, eq=False)
class HistogramDensity:
    counts: np.ndarray
    n: int
    bins_per_axis: int
    discrete_axes: tuple[bool, ...] = ()

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if not self.discrete_axes:
            object.__setattr__(self, "discrete_axes", (False,) * counts.ndim)
        if int(counts.sum()) != self.n:
            raise ValueError("counts must sum to n")
        object.__setattr__(self, "counts", counts)

    @property
    def dims(self) -> int:
        return self.counts.ndim

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(1.0 if disc else 1.0 / s for disc, s in zip(self.discrete_axes, self.counts.shape))

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def table(self) -> np.ndarray:
        """Density per bin (probability per state on discrete axes)."""
        return self.counts / (self.n * self.volume)

    def centers(self, axis: int) -> np.ndarray:
        s = self.counts.shape[axis]
        if self.discrete_axes[axis]:
            return np.arange(s, dtype=float)
        return (np.arange(s) + 0.5) / s

    def bin_index(self, points: np.ndarray) -> tuple[np.ndarray, ...]:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = []
        for a, (disc, s) in enumerate(zip(self.discrete_axes, self.counts.shape)):
            col = points[:, a]
            out.append(col.astype(np.int64) if disc else np.minimum((col * s).astype(np.int64), s - 1))
        return tuple(out)

    def density(self, points) -> np.ndarray:
        return self.table[self.bin_index(points)]

    def integral(self) -> float:
        return float(self.table.sum() * self.volume)

    def marginalize(self, keep: Sequence[int]) -> "HistogramDensity":
        drop = tuple(a for a in range(self.dims) if a not in keep)
        return HistogramDensity(self.counts.sum(axis=drop), self.n, self.bins_per_axis,
                                tuple(self.discrete_axes[a] for a in keep))


def fit_histogram(data, d: int | None = None, n_bins: int | None = None) -> HistogramDensity:
    """Histogram of ``n x d`` points in [0, 1]^d.

    Default bins per axis: round((n / log n)^(1/(2+d))).
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.size == 0 or x.shape[0] == 0:
        raise ValueError("cannot fit a histogram to empty data")
    if d is not None and d != x.shape[1]:
        raise ValueError(f"data has {x.shape[1]} columns, expected {d}")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("histogram data must lie in [0, 1]")
    n, d = x.shape
    b = bins_per_axis(n, d) if n_bins is None else int(n_bins)
    idx = np.minimum((x * b).astype(np.int64), b - 1)
    flat = np.ravel_multi_index(tuple(idx.T), (b,) * d)
    counts = np.bincount(flat, minlength=b ** d).reshape((b,) * d)
    return HistogramDensity(counts, n, b)


def fit_table(data: Dataset, cols: Sequence[int], n_bins: int | None = None) -> HistogramDensity:
    """Joint histogram of dataset columns; discrete columns use their states."""
    cols = list(cols)
    if not cols:
        return HistogramDensity(np.array(data.n), data.n, 1, ())
    n_cont = sum(data.schema[j].kind == CONTINUOUS for j in cols)
    b = bins_per_axis(data.n, len(cols)) if n_bins is None else int(n_bins)
    codes, sizes, disc = [], [], []
    for j in cols:
        spec = data.schema[j]
        col = data.values[:, j]
        if spec.kind == DISCRETE:
            codes.append(col.astype(np.int64))
            sizes.append(spec.cardinality)
            disc.append(True)
        elif spec.kind == CONTINUOUS:
            codes.append(np.minimum((col * b).astype(np.int64), b - 1))
            sizes.append(b)
            disc.append(False)
        else:
            raise ValueError(f"column {spec.name} is not supported on [0, 1]; histograms need bounded data")
    flat = np.ravel_multi_index(codes, sizes)
    counts = np.bincount(flat, minlength=int(np.prod(sizes))).reshape(sizes)
    return HistogramDensity(counts, data.n, b if n_cont else 1, tuple(disc))


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """p-hat(y | pa) per bin, axes ``(*parents, y)``."""

    table: np.ndarray
    low_mass: np.ndarray  # bool over parent bins
    pa_centers: tuple[np.ndarray, ...]
    y_centers: np.ndarray
    y_width: float
    pa_discrete: tuple[bool, ...]
    y_discrete: bool


def conditional_estimate(joint: HistogramDensity, marginal: HistogramDensity, T: float = 0.0) -> ConditionalTable:
    """Ratio estimator p-hat(y, pa) / p-hat(pa); joint axes ``(*parents, y)``.

    Each marginal bin must be a union of joint bins along every parent axis.
    Parent bins with marginal density below T^|Pa| / 2 are flagged low-mass;
    empty ones get NaN rows rather than a division.
    """
    k = joint.dims - 1
    if marginal.dims != k and not (k == 0 and marginal.dims == 0):
        raise ValueError("marginal must cover exactly the parent axes of the joint")
    idx = []
    for a in range(k):
        js, ms = joint.counts.shape[a], marginal.counts.shape[a]
        if js % ms:
            raise ValueError(f"marginal bins on axis {a} do not coarsen the joint bins")
        idx.append(np.arange(js) // (js // ms))
    mdens = marginal.table[np.ix_(*idx)] if k else marginal.table
    mdens = np.asarray(mdens, dtype=float)
    jt = joint.table
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(mdens[..., None] > 0, jt / np.where(mdens > 0, mdens, 1.0)[..., None], np.nan)
    low = mdens < (T ** k) / 2.0 if T > 0 else mdens <= 0
    low = np.asarray(low | (mdens <= 0))
    return ConditionalTable(
        cond, low, tuple(joint.centers(a) for a in range(k)), joint.centers(k), joint.widths[k],
        tuple(joint.discrete_axes[:k]), joint.discrete_axes[k])


# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VertexEstimate:
    parents: tuple[int, ...]
    cond: ConditionalTable


UNKNOWN = None  # sentinel entry for vertices the algorithm will not estimate


@dataclass(frozen=True, eq=False)
class EstimatedModel:
    graph: MixedGraph
    entries: Mapping[int, VertexEstimate | None]
    reasons: Mapping[int, str] = field(default_factory=dict)
    aborted: bool = False  # some vertex violated the TV(L) check

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.names

    def is_unknown(self, v: int) -> bool:
        return self.entries.get(v) is UNKNOWN

    def known(self) -> list[int]:
        return sorted(v for v, e in self.entries.items() if e is not UNKNOWN)


def tv_violation(cond: ConditionalTable, L: float, n_parents: int, slack: float = 2.0) -> str | None:
    """Finite-sample TV(L) screen on an estimated conditional.

    Fails on low-mass parent bins, on densities above 1 + L|Pa|, or when the
    L1 distance between adjacent parent bins exceeds slack * L * step.
    """
    t = cond.table
    if np.any(cond.low_mass):
        return "low-mass parent bin"
    bound = 1.0 + L * n_parents
    if not cond.y_discrete and np.nanmax(t) > bound + 1e-12:
        return f"density {float(np.nanmax(t)):.3f} exceeds bound {bound:g}"
    for a in range(n_parents):
        s = t.shape[a]
        if s < 2:
            continue
        step = 1.0 if cond.pa_discrete[a] else 1.0 / s
        lo = np.take(t, range(s - 1), axis=a)
        hi = np.take(t, range(1, s), axis=a)
        l1 = (np.abs(hi - lo) * cond.y_width).sum(axis=-1)
        if np.nanmax(l1) > slack * L * step + 1e-12:
            return f"adjacent-bin L1 {float(np.nanmax(l1)):.3f} exceeds {slack * L * step:.3f} on parent axis {a}"
    return None


def edge_estimation(out: "VcsgsOutput | MixedGraph", data: Dataset, L: float, T: float) -> EstimatedModel:
    graph = out.graph if isinstance(out, VcsgsOutput) else out
    if tuple(data.names) != tuple(graph.names):
        raise ValueError("dataset columns do not match the graph variables")
    estimable = estimable_vertices(graph)
    entries, reasons = {}, {}
    aborted = False
    for v in range(graph.n_vars):
        if v not in estimable:
            entries[v], reasons[v] = UNKNOWN, "undirected incident edge"
            continue
        pa = graph.parents(v)
        joint = fit_table(data, list(pa) + [v])
        marginal = joint.marginalize(list(range(len(pa))))
        cond = conditional_estimate(joint, marginal, T)
        why = tv_violation(cond, L, len(pa))
        if why is not None:
            entries[v], reasons[v] = UNKNOWN, why
            aborted = True
            continue
        entries[v] = VertexEstimate(tuple(pa), cond)
    return EstimatedModel(graph, entries, reasons, aborted)


def population_estimate(m: DiscreteModel, graph: MixedGraph, parents: Mapping[int, Sequence[int]] | None = None
                        ) -> EstimatedModel:
    """Exact p(y | chosen parents) for each vertex; the population analogue
    of :func:`edge_estimation`.  ``parents`` defaults to the graph's."""
    if not isinstance(m, DiscreteModel):
        raise TypeError("population estimates are exact only for discrete models")
    net = m.network
    entries = {}
    est = estimable_vertices(graph)
    for v in range(graph.n_vars):
        if parents is None and v not in est:
            entries[v] = UNKNOWN
            continue
        pa = tuple(sorted(parents[v] if parents is not None else graph.parents(v)))
        table = net.conditional(v, pa)
        cond = ConditionalTable(table, np.zeros(table.shape[:-1], dtype=bool),
                                tuple(np.arange(m.cardinalities[p], dtype=float) for p in pa),
                                np.arange(m.cardinalities[v], dtype=float), 1.0,
                                (True,) * len(pa), True)
        entries[v] = VertexEstimate(pa, cond)
    return EstimatedModel(graph, entries)


def _true_conditional(m, v: int, axes: list[int], axis_values: list[np.ndarray], y_vals: np.ndarray) -> np.ndarray:
    """True p(y | Pa_true) broadcast over the union axes; shape (*axes, y)."""
    pa = m.dag.parents[v]
    if isinstance(m, DiscreteModel):
        t = m.cpts[v]
        # index true table by the union-axis states, ignoring non-parents
        grids = np.meshgrid(*[vals.astype(np.int64) for vals in axis_values], indexing="ij") if axes else []
        sel = tuple(grids[axes.index(p)] for p in pa)
        out = t[sel] if pa else np.broadcast_to(t, tuple(len(a) for a in axis_values) + t.shape)
        return np.broadcast_to(out, tuple(len(a) for a in axis_values) + (len(y_vals),))
    if isinstance(m, ContinuousSmoothModel):
        grids = np.meshgrid(*axis_values, indexing="ij") if axes else []
        shape = tuple(len(a) for a in axis_values)
        pav = np.stack([grids[axes.index(p)] for p in pa], axis=-1) if pa else np.zeros(shape + (0,))
        mu = m.conditionals[v].mu(pav) if pa else np.full(shape, m.conditionals[v].intercept)
        return m.conditionals[v].density_at_mu(y_vals, mu[..., None])
    raise TypeError(f"distance is defined for models on [0,1] or finite supports, not {type(m).__name__}")


def conditional_probability_distance(m1: EstimatedModel, m2, strict: bool = True) -> float:
    """max |p-hat_M1(y | pa_M1) - p_M2(y | pa_M2)| over consistent parent values.

    Unknown entries contribute 0.  With ``strict`` an estimated parent set
    that is not a subset of the true one raises; otherwise the two parent
    assignments are only required to agree on shared parents.
    """
    if m1.graph.n_vars != m2.dag.n_vars:
        raise ValueError("models are over different variable sets")
    best = 0.0
    for v, est in m1.entries.items():
        if est is UNKNOWN:
            continue
        pa1, pa2 = est.parents, m2.dag.parents[v]
        if strict and not set(pa1) <= set(pa2):
            raise ParentSetMismatchError(
                f"{m1.names[v]}: estimated parents {list(pa1)} not within true parents {list(pa2)}")
        axes = sorted(set(pa1) | set(pa2))
        values, est_index = [], []
        for p in axes:
            if p in pa1:
                values.append(est.cond.pa_centers[pa1.index(p)])
                est_index.append(np.arange(len(values[-1])))
            elif isinstance(m2, DiscreteModel):
                values.append(np.arange(m2.cardinalities[p], dtype=float))
            else:
                values.append(np.linspace(0.0, 1.0, DISTANCE_GRID))
        y_vals = est.cond.y_centers
        truth = _true_conditional(m2, v, axes, values, y_vals)
        shape = tuple(len(a) for a in values)
        # pa1 is sorted, so its axes keep their relative order inside ``axes``;
        # insert singleton axes for the true-only parents and broadcast
        expand = tuple(len(values[i]) if p in pa1 else 1 for i, p in enumerate(axes))
        hat = est.cond.table.reshape(expand + (len(y_vals),))
        diff = np.abs(np.broadcast_to(hat, shape + (len(y_vals),)) - truth)
        if np.any(np.isfinite(diff)):
            best = max(best, float(np.nanmax(diff)))
    return best
