"""Exact population queries on a finite-support Bayesian network.

Discrete models use this directly.  Continuous models are reduced to it by
placing each variable on a quadrature grid (see ``continuous.py``); the
grid masses are then ``weight * density``, so L1 norms of conditionals are
plain sums over masses and densities are recovered by dividing by the
per-point weight.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from ..graph import Dag
from .checks import CheckResult


@dataclass(frozen=True, eq=False)
class TabularNetwork:
    """DAG with one table per variable, axes ``(*parents, self)``.

    ``support[v]`` are the numeric values of the states (integers for
    discrete variables, grid nodes for continuous ones) and ``weights[v]``
    the quadrature weight of each state (all ones for discrete).
    """

    dag: Dag
    tables: tuple[np.ndarray, ...]
    support: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.support)

    @cached_property
    def joint(self) -> np.ndarray:
        p = self.dag.n_vars
        out = np.ones(self.cards)
        for v in self.dag.vars:
            axes = list(self.dag.parents[v]) + [v]
            shape = [1] * p
            # table axes are sorted parents then v; broadcast into joint axes
            t = self.tables[v]
            order = np.argsort(axes)
            t = np.transpose(t, order)
            for a in axes:
                shape[a] = self.cards[a]
            out = out * t.reshape(shape)
        return out

    def marginal(self, vars: Sequence[int]) -> np.ndarray:
        """Joint mass of ``vars`` with axes in the given order."""
        vars = list(vars)
        if len(set(vars)) != len(vars):
            raise ValueError("repeated variable in marginal")
        others = tuple(a for a in self.dag.vars if a not in vars)
        m = self.joint.sum(axis=others) if others else self.joint
        remaining = sorted(vars)
        return np.transpose(m, [remaining.index(v) for v in vars])

    def conditional(self, target: int, given: Sequence[int]) -> np.ndarray:
        """Mass table of ``target`` given ``given``; axes ``(*given, target)``.

        Rows with zero conditioning mass are NaN.
        """
        given = list(given)
        m = self.marginal(given + [target])
        z = m.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(z > 0, m / np.where(z > 0, z, 1.0), np.nan)

    def epsilon(self, x: int, y: int, cond: Iterable[int] = ()) -> float:
        cond = sorted(set(cond))
        if x == y or x in cond or y in cond:
            raise ValueError("epsilon needs distinct x, y outside the conditioning set")
        m = self.marginal([x, y] + cond)
        return epsilon_from_table(m)

    def edge_strength(self, x: int, y: int, values_ok: Callable | None = None) -> float:
        pa = self.dag.parents[y]
        if x not in pa:
            raise ValueError(f"{self.dag.names[x]} is not a parent of {self.dag.names[y]}")
        t = np.moveaxis(self.tables[y], pa.index(x), 0)
        # t[x1, ..rest.., y];  L1 between every pair of x rows
        diff = np.abs(t[:, None] - t[None, :]).sum(axis=-1)
        return float(diff.max())

    # -- assumption checks ---------------------------------------------------

    def check_nz(self, T: float, density: bool = False, max_subset: int | None = None) -> CheckResult:
        """Every p(X | U=u) >= T over all subsets U of the other variables.

        With ``density`` the comparison is against mass / weight.
        """
        p = self.dag.n_vars
        max_subset = p - 1 if max_subset is None else max_subset
        for v in self.dag.vars:
            others = [u for u in self.dag.vars if u != v]
            for r in range(0, max_subset + 1):
                for U in itertools.combinations(others, r):
                    c = self.conditional(v, U)
                    if density:
                        c = c / self.weights[v]
                    bad = np.argwhere(c < T - 1e-12)
                    if bad.size:
                        idx = tuple(int(i) for i in bad[0])
                        return CheckResult(False, {"variable": v, "given": list(U), "index": list(idx),
                                                   "value": float(c[idx])})
        return CheckResult(True)

    def check_tv(self, L: float) -> CheckResult:
        """L1-Lipschitz conditionals on adjacent support points of each parent.

        Adjacent pairs suffice: along a monotone lattice path the l1 distances
        of the steps add up to ``||a - a'||_1``, so the triangle inequality
        extends the bound to every pair of grid points.
        """
        for v in self.dag.vars:
            pa = self.dag.parents[v]
            t = self.tables[v]
            for i, a in enumerate(pa):
                s = self.support[a]
                step = np.abs(np.diff(s))
                lo = np.take(t, range(len(s) - 1), axis=i)
                hi = np.take(t, range(1, len(s)), axis=i)
                l1 = np.abs(hi - lo).sum(axis=-1)
                shape = [1] * l1.ndim
                shape[i] = len(step)
                bound = L * step.reshape(shape)
                bad = np.argwhere(l1 > bound + 1e-12)
                if bad.size:
                    idx = [int(j) for j in bad[0]]
                    a_lo = [float(self.support[q][j]) for q, j in zip(pa, idx)]
                    a_hi = list(a_lo)
                    a_hi[i] = float(s[idx[i] + 1])
                    return CheckResult(False, {"variable": v, "a": a_lo, "a_prime": a_hi,
                                               "l1": float(l1[tuple(idx)])})
        return CheckResult(True)

    def triangle_contrast(self, x: int, y: int, z: int, W: Sequence[int], collider: bool,
                          pair_ok: Callable[[int, int, int], np.ndarray] | None = None) -> float:
        """min over w (and z for colliders) and x1 != x2 of ||p(Y|w,x1[,z]) - p(Y|w,x2[,z])||_1."""
        given = list(W) + [x] + ([z] if collider else [])
        c = self.conditional(y, given)
        xa = len(W)
        c = np.moveaxis(c, xa, 0)  # (x, *W, [z], y)
        d = np.abs(c[:, None] - c[None, :]).sum(axis=-1)  # (x1, x2, *W, [z])
        k = c.shape[0]
        mask = ~np.eye(k, dtype=bool)
        if pair_ok is not None:
            mask &= pair_ok(x, k, k)
        d = d[mask]
        d = d[~np.isnan(d)]
        return float(d.min()) if d.size else np.inf


def epsilon_from_table(m: np.ndarray) -> float:
    """L1 dependence of a mass table with axes ``(x, y, *cond)``."""
    pa = m.sum(axis=(0, 1))
    pxa = m.sum(axis=1)
    pya = m.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        prod = pxa[:, None] * pya[None, :] / np.where(pa > 0, pa, 1.0)
    return float(np.abs(m - prod).sum())
