"""Rejection sampling of random models inside the assumption family.

A draw is accepted only when TV smoothness(L), NZ(T) and k-Triangle-
Faithfulness all pass.  Linear-Gaussian models have no positive density
floor, so for them the NZ check is skipped.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..graph import Dag
from .checks import GenerationFailedError, InfeasibleConstraintsError, InvalidModelError
from .continuous import ContinuousSmoothModel, SmoothConditional
from .discrete import DiscreteModel
from .gaussian import LinearGaussianModel

log = logging.getLogger(__name__)

FAMILIES = ("discrete", "continuous", "gaussian")


@dataclass(frozen=True)
class ModelConstraints:
    k: float = 0.3
    L: float = 1.0
    T: float = 0.05
    n_vars: int = 5
    max_degree: int = 2  # maximum number of parents per vertex
    edge_prob: float = 0.5
    cardinality: int = 2
    # lower bound on the L1 shift each parent state change induces in its
    # child's effect component; 0 leaves effects unconstrained
    min_effect: float = 0.0
    max_attempts: int = 10_000

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GenerationInfo:
    attempts: int
    rejections: dict


def random_dag(n_vars: int, max_degree: int, edge_prob: float, rng: np.random.Generator) -> Dag:
    order = rng.permutation(n_vars)
    edges = []
    for j in range(1, n_vars):
        child = int(order[j])
        cands = [int(order[i]) for i in range(j) if rng.random() < edge_prob]
        if len(cands) > max_degree:
            cands = [int(c) for c in rng.choice(cands, size=max_degree, replace=False)]
        edges.extend((c, child) for c in cands)
    return Dag.from_edges(n_vars, edges)


def _effect_pair(card: int, min_effect: float, rng) -> np.ndarray:
    for _ in range(1000):
        eff = rng.dirichlet(np.ones(card), size=card)
        if min_effect <= 0 or np.abs(np.diff(eff, axis=0)).sum(axis=1).min() >= min_effect:
            return eff
    raise GenerationFailedError(f"could not draw effects with L1 shift >= {min_effect}")


def _discrete_cpt(n_parents: int, card: int, c: ModelConstraints, rng) -> np.ndarray:
    base = rng.dirichlet(np.ones(card))
    floor = min(1.0 / card, 1.2 * c.T)
    if n_parents == 0:
        return floor + (1.0 - card * floor) * base
    effects = [_effect_pair(card, c.min_effect, rng) for _ in range(n_parents)]
    grids = np.meshgrid(*([np.arange(card)] * n_parents), indexing="ij")
    mix = sum(eff[g] for eff, g in zip(effects, grids)) / n_parents
    # keep the largest adjacent-state shift within the Lipschitz budget
    shift = max(np.abs(np.diff(eff, axis=0)).sum(axis=1).max() for eff in effects) / n_parents
    lam = rng.uniform(0.6, 1.0)
    if shift > 0:
        lam = min(lam, 0.95 * c.L / ((1.0 - card * floor) * shift))
    table = (1.0 - lam) * base + lam * mix
    table = floor + (1.0 - card * floor) * table
    return table / table.sum(axis=-1, keepdims=True)


def _discrete_model(dag: Dag, c: ModelConstraints, rng) -> DiscreteModel:
    cards = (c.cardinality,) * dag.n_vars
    cpts = tuple(_discrete_cpt(len(dag.parents[v]), c.cardinality, c, rng) for v in dag.vars)
    return DiscreteModel(dag, cards, cpts)


def _continuous_model(dag: Dag, c: ModelConstraints, rng) -> ContinuousSmoothModel:
    conds = []
    for v in dag.vars:
        k = len(dag.parents[v])
        if k == 0:
            conds.append(SmoothConditional(1.0, 0.5, (), 1.0))
            continue
        w = rng.uniform(max(1.5 * c.T, 0.3), 0.7)
        s = rng.uniform(0.2, 0.4)
        # L1 slope of the bump in mu is at most 2 phi(0)/s (1 - w) ~ 0.8 (1 - w)/s
        bmax = 0.9 * c.L * s / (0.8 * (1.0 - w))
        slopes = rng.uniform(0.5, 1.0, size=k) * min(bmax, 0.6 / k) * rng.choice([-1, 1], size=k)
        lo = sum(min(0.0, b) for b in slopes)
        hi = sum(max(0.0, b) for b in slopes)
        intercept = rng.uniform(0.2 - lo, max(0.2 - lo, 0.8 - hi))
        conds.append(SmoothConditional(float(w), float(intercept), tuple(float(b) for b in slopes), float(s)))
    return ContinuousSmoothModel(dag, tuple(conds), c.L, c.T)


def _gaussian_model(dag: Dag, c: ModelConstraints, rng) -> LinearGaussianModel:
    coefs = {}
    for a, b in dag.edges:
        coefs[(a, b)] = float(rng.uniform(0.3, 1.0) * rng.choice([-1, 1]))
    return LinearGaussianModel(dag, coefs, (1.0,) * dag.n_vars)


_BUILDERS = {"discrete": _discrete_model, "continuous": _continuous_model, "gaussian": _gaussian_model}


def check_feasible(family: str, c: ModelConstraints) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if not 0 < c.T < 1:
        raise InfeasibleConstraintsError("T must lie in (0, 1)")
    if family == "discrete" and c.T * c.cardinality > 1.0:
        raise InfeasibleConstraintsError(
            f"{c.cardinality} states cannot each have probability >= {c.T}")
    if c.k <= 0 or c.L <= 0:
        raise InfeasibleConstraintsError("k and L must be positive")
    if c.n_vars < 1 or c.max_degree < 0:
        raise InfeasibleConstraintsError("need at least one variable and a non-negative degree")


def validate_model(m, c: ModelConstraints) -> str | None:
    """Name of the first failing validator, or None if ``m`` is in the family."""
    if not m.check_tv(c.L):
        return "tv"
    if m.family != "gaussian" and not m.check_nz(c.T):
        return "nz"
    if m.family == "continuous" and not m.check_density_bound():
        return "density_bound"
    if not m.check_ktf(c.k):
        return "ktf"
    return None


def random_model(family: str, constraints: ModelConstraints | None = None, seed=None, return_info: bool = False):
    """Draw a random model of ``family`` in the constrained family."""
    c = constraints or ModelConstraints()
    check_feasible(family, c)
    rng = np.random.default_rng(seed)
    rejections: dict[str, int] = {}
    for attempt in range(1, c.max_attempts + 1):
        dag = random_dag(c.n_vars, c.max_degree, c.edge_prob, rng)
        try:
            m = _BUILDERS[family](dag, c, rng)
        except InvalidModelError:
            rejections["invalid"] = rejections.get("invalid", 0) + 1
            continue
        failed = validate_model(m, c)
        if failed is None:
            log.debug("accepted %s model after %d attempts (%s)", family, attempt, rejections)
            info = GenerationInfo(attempt, rejections)
            return (m, info) if return_info else m
        rejections[failed] = rejections.get(failed, 0) + 1
    raise GenerationFailedError(
        f"no {family} model satisfied the constraints in {c.max_attempts} attempts; rejections: {rejections}")
