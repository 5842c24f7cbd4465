"""Smooth conditional densities on [0, 1].

Each conditional is a two-component mixture

    p(y | pa) = w + (1 - w) * TN(y; mu(pa), sigma)

of a uniform floor ``w`` and a Gaussian bump truncated to [0, 1] whose
location is affine in the parent values, ``mu(pa) = intercept + slopes . pa``.
The floor gives NZ(w) directly; the conditional depends on the parents only
through ``mu``, which keeps suprema over parent values cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special, stats

from ..graph import Dag
from .checks import CheckResult, InvalidModelError
from .dataset import CONTINUOUS, Dataset, VariableSpec
from .discrete import tabular_ktf
from .tabular import TabularNetwork

GRID_POINTS = 33
MAX_GRID_CELLS = 2_000_000
Y_QUAD_POINTS = 1025
KTF_MIN_GAP = 0.5


@dataclass(frozen=True)
class SmoothConditional:
    floor_weight: float
    intercept: float
    slopes: tuple[float, ...]
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        if not 0.0 <= self.floor_weight <= 1.0:
            raise InvalidModelError("floor weight must lie in [0, 1]")
        if self.scale <= 0:
            raise InvalidModelError("bump scale must be positive")

    def mu(self, pa: np.ndarray) -> np.ndarray:
        pa = np.asarray(pa, dtype=float)
        if not self.slopes:
            return np.full(pa.shape[:-1] if pa.ndim else (), self.intercept)
        return self.intercept + pa @ np.asarray(self.slopes)

    def density_at_mu(self, y: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Density for broadcastable ``y`` and ``mu``."""
        s = self.scale
        z = special.ndtr((1.0 - mu) / s) - special.ndtr(-mu / s)
        bump = np.exp(-0.5 * ((y - mu) / s) ** 2) / (s * np.sqrt(2 * np.pi) * z)
        return self.floor_weight + (1.0 - self.floor_weight) * bump

    def density(self, y, pa) -> np.ndarray:
        return self.density_at_mu(np.asarray(y, dtype=float), self.mu(pa))

    def mu_range(self) -> tuple[float, float]:
        lo = self.intercept + sum(min(0.0, b) for b in self.slopes)
        hi = self.intercept + sum(max(0.0, b) for b in self.slopes)
        return lo, hi

    def peak_density(self) -> float:
        """Sup of the density over y in [0,1] and all parent values."""
        lo, hi = self.mu_range()
        mus = np.linspace(lo, hi, 257)
        return float(self.density_at_mu(np.clip(mus, 0.0, 1.0), mus).max())


def trapezoid_grid(q: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(0.0, 1.0, q)
    w = np.full(q, 1.0 / (q - 1))
    w[[0, -1]] *= 0.5
    return x, w


@lru_cache(maxsize=8)
def _y_quad():
    # composite Simpson on an odd number of nodes
    y = np.linspace(0.0, 1.0, Y_QUAD_POINTS)
    w = np.ones(Y_QUAD_POINTS)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return y, w / (3.0 * (Y_QUAD_POINTS - 1))


def l1_between(cond: SmoothConditional, mu1: np.ndarray, mu2: np.ndarray) -> np.ndarray:
    """||p(.|mu1) - p(.|mu2)||_1 by Simpson quadrature in y."""
    y, w = _y_quad()
    mu1 = np.asarray(mu1, dtype=float)[..., None]
    mu2 = np.asarray(mu2, dtype=float)[..., None]
    d = np.abs(cond.density_at_mu(y, mu1) - cond.density_at_mu(y, mu2))
    return d @ w


@dataclass(frozen=True, eq=False)
class ContinuousSmoothModel:
    """Bayesian network of :class:`SmoothConditional` densities on [0, 1]."""

    dag: Dag
    conditionals: tuple[SmoothConditional, ...]
    smoothness_L: float
    floor_T: float

    family = "continuous"

    def __post_init__(self):
        if len(self.conditionals) != self.dag.n_vars:
            raise InvalidModelError("need one conditional per variable")
        for v, c in zip(self.dag.vars, self.conditionals):
            if len(c.slopes) != len(self.dag.parents[v]):
                raise InvalidModelError(f"{self.dag.names[v]}: one slope per parent required")
        if self.smoothness_L <= 0:
            raise InvalidModelError("smoothness_L must be positive")
        if not 0 < self.floor_T < 1:
            raise InvalidModelError("floor_T must lie in (0, 1)")
        object.__setattr__(self, "conditionals", tuple(self.conditionals))
        object.__setattr__(self, "_networks", {})

    @property
    def schema(self) -> tuple[VariableSpec, ...]:
        return tuple(VariableSpec(n, CONTINUOUS) for n in self.dag.names)

    def density(self, y_var: int, y, pa_values) -> np.ndarray:
        return self.conditionals[y_var].density(y, pa_values)

    def sample(self, n: int, seed: int) -> Dataset:
        if n < 1:
            raise ValueError("sample size must be at least 1")
        rng = np.random.default_rng(seed)
        out = np.zeros((n, self.dag.n_vars))
        for v in self.dag.topological_order:
            c = self.conditionals[v]
            pa = self.dag.parents[v]
            mu = c.mu(out[:, list(pa)]) if pa else np.full(n, c.intercept)
            floor = rng.random(n) < c.floor_weight
            uni = rng.random(n)
            a, b = (0.0 - mu) / c.scale, (1.0 - mu) / c.scale
            bump = stats.truncnorm.rvs(a, b, loc=mu, scale=c.scale, size=n, random_state=rng)
            out[:, v] = np.clip(np.where(floor, uni, bump), 0.0, 1.0)
        return Dataset(self.schema, out, seed)

    # -- quadrature-grid reduction ------------------------------------------

    def grid_points(self) -> int:
        p = self.dag.n_vars
        return int(max(5, min(GRID_POINTS, np.floor(MAX_GRID_CELLS ** (1.0 / p)))))

    def network(self, q: int | None = None) -> TabularNetwork:
        """Discretize onto a ``q``-point trapezoid grid per variable.

        Each conditional's grid masses are renormalized to sum to one, so the
        grid network is an exact Bayesian network on the same DAG.
        """
        q = self.grid_points() if q is None else q
        if q not in self._networks:
            x, w = trapezoid_grid(q)
            tables = []
            for v in self.dag.vars:
                pa = self.dag.parents[v]
                mesh = np.stack(np.meshgrid(*([x] * len(pa)), indexing="ij"), axis=-1) if pa else np.zeros(())
                mu = self.conditionals[v].mu(mesh) if pa else np.asarray(self.conditionals[v].intercept)
                dens = self.conditionals[v].density_at_mu(x, mu[..., None])
                mass = dens * w
                tables.append(mass / mass.sum(axis=-1, keepdims=True))
            self._networks[q] = TabularNetwork(self.dag, tuple(tables), (x,) * self.dag.n_vars, (w,) * self.dag.n_vars)
        return self._networks[q]

    # -- population quantities -----------------------------------------------

    def edge_strength(self, x: int, y: int, q: int = GRID_POINTS) -> float:
        """Grid maximization of the L1 contrast, plus one local refinement.

        The conditional depends on the parents through ``mu`` only, so the
        remaining parents enter as an offset ``m`` swept over its range.
        """
        pa = self.dag.parents[y]
        if x not in pa:
            raise ValueError(f"{self.dag.names[x]} is not a parent of {self.dag.names[y]}")
        c = self.conditionals[y]
        beta = c.slopes[pa.index(x)]
        others = [b for b, p in zip(c.slopes, pa) if p != x]
        m_lo = c.intercept + sum(min(0.0, b) for b in others)
        m_hi = c.intercept + sum(max(0.0, b) for b in others)

        def evaluate(ms, x1s, x2s):
            M, X1, X2 = np.meshgrid(ms, x1s, x2s, indexing="ij")
            vals = l1_between(c, M + beta * X1, M + beta * X2)
            i = np.unravel_index(int(np.argmax(vals)), vals.shape)
            return float(vals[i]), (M[i], X1[i], X2[i])

        ms = np.linspace(m_lo, m_hi, q if m_hi > m_lo else 1)
        g = np.linspace(0.0, 1.0, q)
        best, (m0, a0, b0) = evaluate(ms, g, g)
        h_m = (m_hi - m_lo) / (q - 1) if m_hi > m_lo else 0.0
        h = 1.0 / (q - 1)
        fine = np.linspace(-1.0, 1.0, 9)
        refined, _ = evaluate(
            np.clip(m0 + h_m * fine, m_lo, m_hi) if h_m else np.array([m0]),
            np.clip(a0 + h * fine, 0.0, 1.0),
            np.clip(b0 + h * fine, 0.0, 1.0),
        )
        return max(best, refined)

    def epsilon(self, x: int, y: int, cond=()) -> float:
        cond = list(cond)
        if len(cond) > 3:
            raise ValueError("continuous epsilon supports at most 3 conditioning variables")
        return self.network().epsilon(x, y, cond)

    # -- assumption checks ---------------------------------------------------

    def _parent_grid(self, n_parents: int) -> np.ndarray:
        q = GRID_POINTS if n_parents <= 2 else 9
        return np.linspace(0.0, 1.0, q)

    def check_tv(self, L: float) -> CheckResult:
        for v in self.dag.vars:
            pa = self.dag.parents[v]
            if not pa:
                continue
            c = self.conditionals[v]
            g = self._parent_grid(len(pa))
            mesh = np.stack(np.meshgrid(*([g] * len(pa)), indexing="ij"), axis=-1)
            mu = c.mu(mesh)
            step = g[1] - g[0]
            for i in range(len(pa)):
                lo = np.take(mu, range(len(g) - 1), axis=i)
                hi = np.take(mu, range(1, len(g)), axis=i)
                l1 = l1_between(c, lo, hi)
                j = np.unravel_index(int(np.argmax(l1)), l1.shape)
                if l1[j] > L * step + 1e-12:
                    a = [float(g[k]) for k in j]
                    a2 = list(a)
                    a2[i] = float(g[j[i] + 1])
                    return CheckResult(False, {"variable": v, "a": a, "a_prime": a2, "l1": float(l1[j])})
        return CheckResult(True)

    def check_density_bound(self) -> CheckResult:
        """Every conditional is bounded by 1 + L |Pa(Y)|."""
        for v in self.dag.vars:
            bound = 1.0 + self.smoothness_L * len(self.dag.parents[v])
            peak = self.conditionals[v].peak_density()
            if peak > bound + 1e-9:
                return CheckResult(False, {"variable": v, "peak": peak, "bound": bound})
        return CheckResult(True)

    def check_nz(self, T: float) -> CheckResult:
        for v, c in enumerate(self.conditionals):
            if c.floor_weight < T:
                return CheckResult(False, {"variable": v, "given": list(self.dag.parents[v]),
                                           "value": c.floor_weight})
        return self.network().check_nz(T, density=True)

    def check_ktf(self, k: float, min_gap: float = KTF_MIN_GAP) -> CheckResult:
        """k-TF on the quadrature grid.

        For continuous X the minimum over x1 != x2 is taken over grid pairs at
        least ``min_gap`` apart; without a gap the contrast of any smooth
        family tends to zero as x1 -> x2.
        """
        net = self.network(min(self.grid_points(), 17))

        def pair_ok(x, k1, k2):
            s = net.support[x]
            return np.abs(s[:, None] - s[None, :]) >= min_gap - 1e-12

        return tabular_ktf(net, k, pair_ok)

    def check_normalization(self, tol: float = 1e-6) -> CheckResult:
        y, w = _y_quad()
        for v, c in enumerate(self.conditionals):
            lo, hi = c.mu_range()
            for mu in np.linspace(lo, hi, 9):
                total = float(c.density_at_mu(y, np.asarray(mu)) @ w)
                if abs(total - 1.0) > tol:
                    return CheckResult(False, {"variable": v, "mu": float(mu), "integral": total})
        return CheckResult(True)


def conditional_from_dict(d: dict) -> SmoothConditional:
    return SmoothConditional(d["floor_weight"], d["intercept"], tuple(d["slopes"]), d["scale"])


def uniform_conditional(n_parents: int = 0) -> SmoothConditional:
    return SmoothConditional(1.0, 0.5, (0.0,) * n_parents, 1.0)


def mus_for(cond: SmoothConditional, pa_values: Sequence[np.ndarray]) -> np.ndarray:
    return cond.mu(np.stack(pa_values, axis=-1))
