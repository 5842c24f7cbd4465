from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from ..graph import Dag
from .checks import CheckResult, InvalidModelError
from .dataset import DISCRETE, Dataset, VariableSpec
from .tabular import TabularNetwork

ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Categorical Bayesian network.

    ``cpts[v]`` has shape ``(*[card[p] for p in parents(v)], card[v])`` with
    parents in increasing index order.
    """

    dag: Dag
    cardinalities: tuple[int, ...]
    cpts: tuple[np.ndarray, ...]

    family = "discrete"

    def __post_init__(self):
        cards = tuple(int(c) for c in self.cardinalities)
        object.__setattr__(self, "cardinalities", cards)
        if len(cards) != self.dag.n_vars or len(self.cpts) != self.dag.n_vars:
            raise InvalidModelError("need one cardinality and one CPT per variable")
        cpts = []
        for v in self.dag.vars:
            t = np.array(self.cpts[v], dtype=float)
            want = tuple(cards[p] for p in self.dag.parents[v]) + (cards[v],)
            if t.shape != want:
                raise InvalidModelError(f"CPT of {self.dag.names[v]} has shape {t.shape}, expected {want}")
            if np.any(t < 0):
                raise InvalidModelError(f"negative probability in CPT of {self.dag.names[v]}")
            if np.any(np.abs(t.sum(axis=-1) - 1.0) > ROW_TOL):
                raise InvalidModelError(f"CPT rows of {self.dag.names[v]} do not sum to 1")
            t.setflags(write=False)
            cpts.append(t)
        object.__setattr__(self, "cpts", tuple(cpts))

    @cached_property
    def network(self) -> TabularNetwork:
        return TabularNetwork(
            self.dag,
            self.cpts,
            tuple(np.arange(c, dtype=float) for c in self.cardinalities),
            tuple(np.ones(c) for c in self.cardinalities),
        )

    @property
    def schema(self) -> tuple[VariableSpec, ...]:
        return tuple(VariableSpec(n, DISCRETE, c) for n, c in zip(self.dag.names, self.cardinalities))

    def sample(self, n: int, seed: int) -> Dataset:
        if n < 1:
            raise ValueError("sample size must be at least 1")
        rng = np.random.default_rng(seed)
        out = np.zeros((n, self.dag.n_vars), dtype=np.int64)
        for v in self.dag.topological_order:
            pa = self.dag.parents[v]
            t = self.cpts[v]
            if pa:
                rows = t[tuple(out[:, p] for p in pa)]
            else:
                rows = np.broadcast_to(t, (n, t.shape[-1]))
            cum = np.cumsum(rows, axis=1)
            u = rng.random(n)
            out[:, v] = np.minimum((u[:, None] >= cum).sum(axis=1), t.shape[-1] - 1)
        return Dataset(self.schema, out, seed)

    def conditional_probability(self, y: int, pa_values: Sequence[int]) -> np.ndarray:
        return self.cpts[y][tuple(pa_values)]

    def edge_strength(self, x: int, y: int) -> float:
        return self.network.edge_strength(x, y)

    def epsilon(self, x: int, y: int, cond=()) -> float:
        return self.network.epsilon(x, y, cond)

    def check_nz(self, T: float) -> CheckResult:
        for v in self.dag.vars:
            if self.cpts[v].min() < T:
                idx = np.unravel_index(int(np.argmin(self.cpts[v])), self.cpts[v].shape)
                return CheckResult(False, {"variable": v, "given": list(self.dag.parents[v]),
                                           "index": [int(i) for i in idx],
                                           "value": float(self.cpts[v].min())})
        return self.network.check_nz(T)

    def check_tv(self, L: float) -> CheckResult:
        return self.network.check_tv(L)

    def check_ktf(self, k: float) -> CheckResult:
        return tabular_ktf(self.network, k)


def tabular_ktf(net: TabularNetwork, k: float, pair_ok=None, max_w: int | None = None) -> CheckResult:
    """Nonparametric k-Triangle-Faithfulness over every triangle edge X->Y.

    Non-collider third vertex Z: for all W in V minus {X,Y,Z},
    min_w min_{x1!=x2} ||p(Y|w,x1) - p(Y|w,x2)||_1 >= k e(X->Y).
    Collider Z: the same with Z's value also conditioned on and minimized.
    """
    dag = net.dag
    violations = []
    for tri in dag.triangles():
        for x, y in itertools.permutations(tri, 2):
            if (x, y) not in dag.edges:
                continue
            (z,) = set(tri) - {x, y}
            collider = (x, z) in dag.edges and (y, z) in dag.edges
            e = net.edge_strength(x, y)
            rest = [v for v in dag.vars if v not in tri]
            top = len(rest) if max_w is None else min(max_w, len(rest))
            for r in range(top + 1):
                for W in itertools.combinations(rest, r):
                    c = net.triangle_contrast(x, y, z, W, collider, pair_ok)
                    if c < k * e - 1e-12:
                        violations.append({"x": x, "y": y, "z": z, "W": list(W), "collider": collider,
                                           "contrast": c, "edge_strength": e})
    return CheckResult(not violations, violations[0] if violations else None, violations)
