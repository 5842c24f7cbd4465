from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from ..graph import Dag
from .checks import CheckResult, InvalidModelError
from .dataset import REAL, Dataset, VariableSpec


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """X_i = sum_j a_ij X_j + e_i with independent Gaussian noise."""

    dag: Dag
    coefficients: Mapping[tuple[int, int], float]  # (source, target) -> a
    noise_variances: tuple[float, ...]

    family = "gaussian"

    def __post_init__(self):
        coefs = {(int(a), int(b)): float(c) for (a, b), c in self.coefficients.items()}
        if set(coefs) != set(self.dag.edges):
            raise InvalidModelError("coefficients must be given for exactly the DAG edges")
        if any(c == 0.0 for c in coefs.values()):
            raise InvalidModelError("edge present iff coefficient nonzero")
        nv = tuple(float(s) for s in self.noise_variances)
        if len(nv) != self.dag.n_vars or any(s <= 0 for s in nv):
            raise InvalidModelError("need one positive noise variance per variable")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "noise_variances", nv)

    @property
    def schema(self) -> tuple[VariableSpec, ...]:
        return tuple(VariableSpec(n, REAL) for n in self.dag.names)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        """B with B[target, source] = a, so that X = B X + e."""
        p = self.dag.n_vars
        B = np.zeros((p, p))
        for (a, b), c in self.coefficients.items():
            B[b, a] = c
        return B

    @cached_property
    def covariance(self) -> np.ndarray:
        p = self.dag.n_vars
        A = np.linalg.inv(np.eye(p) - self.weight_matrix)
        return A @ np.diag(self.noise_variances) @ A.T

    def sample(self, n: int, seed: int) -> Dataset:
        if n < 1:
            raise ValueError("sample size must be at least 1")
        rng = np.random.default_rng(seed)
        p = self.dag.n_vars
        out = np.zeros((n, p))
        noise = rng.standard_normal((n, p)) * np.sqrt(self.noise_variances)
        for v in self.dag.topological_order:
            out[:, v] = noise[:, v]
            for u in self.dag.parents[v]:
                out[:, v] += self.coefficients[(u, v)] * out[:, u]
        return Dataset(self.schema, out, seed)

    def edge_strength(self, x: int, y: int) -> float:
        if (x, y) not in self.coefficients:
            raise ValueError(f"{self.dag.names[x]} is not a parent of {self.dag.names[y]}")
        return abs(self.coefficients[(x, y)])

    def epsilon(self, x, y, cond=()):
        raise NotImplementedError("linear-Gaussian dependence is queried through partial_correlation")

    def partial_correlation(self, x: int, y: int, cond: Iterable[int] = ()) -> float:
        return partial_correlation_from_cov(self.covariance, x, y, cond)

    def check_nz(self, T: float) -> CheckResult:
        return CheckResult(False, {"reason": "Gaussian densities have unbounded support and no positive floor"})

    def check_tv(self, L: float) -> CheckResult:
        """Exact: a mean shift d between equal-variance normals has L1 distance
        2(2 Phi(|d| / 2s) - 1) <= |d| sqrt(2/pi) / s, and |d| <= max|a| ||a - a'||_1."""
        for v in self.dag.vars:
            pa = self.dag.parents[v]
            if not pa:
                continue
            s = np.sqrt(self.noise_variances[v])
            worst = max(abs(self.coefficients[(u, v)]) for u in pa)
            lip = worst * np.sqrt(2.0 / np.pi) / s
            if lip > L + 1e-12:
                return CheckResult(False, {"variable": v, "lipschitz": float(lip)})
        return CheckResult(True)

    def check_ktf(self, k: float) -> CheckResult:
        """Linear-Gaussian k-TF on every triangle <X,Y,Z> with edge X-Z:
        |rho(X,Z|W)| >= k |e(X-Z)| for W excluding Y (non-collider) or
        containing Y (collider)."""
        dag = self.dag
        violations = []
        for tri in dag.triangles():
            for y in tri:
                x, z = [t for t in tri if t != y]
                e = self.coefficients.get((x, z), self.coefficients.get((z, x)))
                collider = (x, y) in dag.edges and (z, y) in dag.edges
                rest = [v for v in dag.vars if v not in (x, z, y)]
                for r in range(len(rest) + 1):
                    for W in itertools.combinations(rest, r):
                        W = list(W) + ([y] if collider else [])
                        rho = abs(self.partial_correlation(x, z, W))
                        if rho < k * abs(e) - 1e-12:
                            violations.append({"x": x, "z": z, "y": y, "W": sorted(W), "collider": collider,
                                               "partial_correlation": rho, "edge_strength": abs(e)})
        return CheckResult(not violations, violations[0] if violations else None, violations)


def partial_correlation_from_cov(cov: np.ndarray, x: int, y: int, cond: Iterable[int] = ()) -> float:
    """Partial correlation via the Schur complement of the conditioning block."""
    cond = [c for c in cond]
    if x in cond or y in cond:
        raise ValueError("x and y must not be in the conditioning set")
    idx = [x, y]
    S = cov[np.ix_(idx, idx)]
    if cond:
        C = cov[np.ix_(cond, cond)]
        if np.linalg.cond(C) > 1e12:
            raise SingularCovarianceError("conditioning covariance is singular")
        B = cov[np.ix_(idx, cond)]
        S = S - B @ np.linalg.solve(C, B.T)
    denom = np.sqrt(S[0, 0] * S[1, 1])
    if denom <= 0:
        raise SingularCovarianceError("degenerate conditional variance")
    return float(S[0, 1] / denom)
