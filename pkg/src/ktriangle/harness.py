"""Monte-Carlo sweeps of error kinds and estimation distance against n.

Seeds come from ``numpy.random.SeedSequence(base_seed, spawn_key=...)``:
model ``i`` uses key ``(0, i)`` and the replicate ``(i, n, r)`` sample uses
``(1, i, n, r)``, so any row can be regenerated on its own.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .citest import DataCI, TestSchedule
from .discovery import ErrorKind, VcsgsOutput, classify_error, vcsgs
from .estimation import conditional_probability_distance, edge_estimation
from .graph import Dag, MixedGraph
from .scm import ModelConstraints, random_model

log = logging.getLogger(__name__)

CSV_HEADER = ("model_id", "n", "replicate", "error_kind", "psi_class", "distance", "exceeded", "runtime_ms")
PSI_CLASSES = ("Psi1", "Psi2", "Psi3")


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "discrete"
    n_vars: int = 5
    max_degree: int = 2
    k: float = 0.3
    L: float = 1.0
    T: float = 0.05
    schedule_c: float | None = None  # None: per-data-kind default
    n_grid: tuple[int, ...] = (200, 1000, 5000, 20000)
    replicates: int = 50
    n_models: int = 20
    base_seed: int = 0
    delta: float = 0.1
    min_effect: float = 0.0
    edge_prob: float = 0.5
    record_timing: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.replicates < 1 or self.n_models < 1:
            raise ValueError("need at least one model and one replicate")

    def constraints(self) -> ModelConstraints:
        return ModelConstraints(k=self.k, L=self.L, T=self.T, n_vars=self.n_vars, max_degree=self.max_degree,
                                edge_prob=self.edge_prob, min_effect=self.min_effect)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "n_grid" in d:
            d["n_grid"] = tuple(d["n_grid"])
        return cls(**d)


@dataclass(frozen=True)
class ReportRow:
    model_id: int
    n: int
    replicate: int
    error_kind: str
    psi_class: str
    distance: float
    exceeded: bool
    runtime_ms: float | None = None
    seed: int | None = None
    failure: str | None = None

    def csv_fields(self) -> list[str]:
        dist = "" if math.isnan(self.distance) else repr(round(self.distance, 12))
        rt = "" if self.runtime_ms is None else f"{self.runtime_ms:.1f}"
        return [str(self.model_id), str(self.n), str(self.replicate), self.error_kind, self.psi_class,
                dist, str(int(self.exceeded)), rt]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ReportRow] = field(default_factory=list)

    def sorted_rows(self) -> list[ReportRow]:
        return sorted(self.rows, key=lambda r: (r.model_id, r.n, r.replicate))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.sorted_rows():
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def seeds(self) -> list[dict]:
        return [{"model_id": r.model_id, "n": r.n, "replicate": r.replicate, "seed": r.seed}
                for r in self.sorted_rows()]


def model_seed(base_seed: int, model_id: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(0, model_id)).generate_state(1)[0])


def sample_seed(base_seed: int, model_id: int, n: int, replicate: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(1, model_id, n, replicate)).generate_state(1)[0])


def psi_classify(out_graph: "MixedGraph | VcsgsOutput", truth: Dag) -> str:
    """Psi1: everything the output asserts holds; Psi2: a false adjacency or
    orientation; Psi3: only some non-adjacency (a missed edge) is false."""
    g = out_graph.graph if isinstance(out_graph, VcsgsOutput) else out_graph
    if any(e not in truth.skeleton for e in g.skeleton):
        return "Psi2"
    if any((a, b) not in truth.edges for a, b in g.directed):
        return "Psi2"
    if any(e in truth.skeleton for e in g.nonadjacency):
        return "Psi3"
    return "Psi1"


def evaluate_replicate(model, cfg: ExperimentConfig, data) -> tuple[VcsgsOutput, str, str, float]:
    """One discover -> classify -> estimate -> distance pass."""
    schedule = TestSchedule(cfg.schedule_c) if cfg.schedule_c is not None else None
    out = vcsgs(DataCI(data, schedule), model.dag.names)
    err = classify_error(out, model.dag)
    psi = psi_classify(out, model.dag)
    est = edge_estimation(out, data, cfg.L, cfg.T)
    dist = conditional_probability_distance(est, model, strict=False)
    return out, err.kind.value, psi, dist


def _run_model(args) -> list[ReportRow]:
    cfg, model_id = args
    model = random_model(cfg.family, cfg.constraints(), seed=model_seed(cfg.base_seed, model_id))
    rows = []
    for n, r in itertools.product(cfg.n_grid, range(cfg.replicates)):
        seed = sample_seed(cfg.base_seed, model_id, n, r)
        t0 = time.perf_counter()
        try:
            data = model.sample(n, seed)
            _, kind, psi, dist = evaluate_replicate(model, cfg, data)
            failure = None
        except Exception as exc:  # recorded per row, sweep continues
            log.warning("model %d n=%d rep=%d failed: %s", model_id, n, r, exc)
            kind, psi, dist, failure = "failed", "", float("nan"), repr(exc)
        rt = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else None
        rows.append(ReportRow(model_id, n, r, kind, psi, dist, bool(dist > cfg.delta), rt, seed, failure))
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    report = ExperimentReport(cfg)
    tasks = [(cfg, i) for i in range(cfg.n_models)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(_run_model, tasks):
                report.rows.extend(rows)
    else:
        for t in tasks:
            report.rows.extend(_run_model(t))
            log.info("model %d done", t[1])
    report.rows = report.sorted_rows()
    return report


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupSummary:
    key: tuple
    count: int
    errors: int
    exceeded: int
    distance_sum: float
    distance_count: int
    psi_counts: tuple[int, int, int]

    @property
    def error_rate(self) -> float:
        return self.errors / self.count

    @property
    def exceed_rate(self) -> float:
        return self.exceeded / self.count

    @property
    def mean_distance(self) -> float:
        return self.distance_sum / self.distance_count if self.distance_count else float("nan")

    def stderr(self, rate: float) -> float:
        return math.sqrt(rate * (1.0 - rate) / self.count)

    def merge(self, other: "GroupSummary") -> "GroupSummary":
        if other.key != self.key:
            raise ValueError("cannot merge different groups")
        return GroupSummary(self.key, self.count + other.count, self.errors + other.errors,
                            self.exceeded + other.exceeded, self.distance_sum + other.distance_sum,
                            self.distance_count + other.distance_count,
                            tuple(a + b for a, b in zip(self.psi_counts, other.psi_counts)))

    def as_dict(self, keys: Sequence[str]) -> dict:
        return {**dict(zip(keys, self.key)), "count": self.count,
                "error_rate": self.error_rate, "error_se": self.stderr(self.error_rate),
                "exceed_rate": self.exceed_rate, "exceed_se": self.stderr(self.exceed_rate),
                "mean_distance": self.mean_distance,
                **{p.lower(): c for p, c in zip(PSI_CLASSES, self.psi_counts)}}


def _row_value(r, k):
    return getattr(r, k) if not isinstance(r, dict) else r[k]


def summarize(rows: "ExperimentReport | Iterable[ReportRow]", keys: Sequence[str] = ("n",)) -> dict[tuple, GroupSummary]:
    """Grouped counts; any error kind other than 'none' counts as an error."""
    rows = rows.rows if isinstance(rows, ExperimentReport) else list(rows)
    if not rows:
        raise ValueError("cannot summarize an empty report")
    out: dict[tuple, GroupSummary] = {}
    for r in rows:
        key = tuple(_row_value(r, k) for k in keys)
        dist = float(_row_value(r, "distance"))
        psi = _row_value(r, "psi_class")
        s = GroupSummary(key, 1, int(_row_value(r, "error_kind") != ErrorKind.NONE.value),
                         int(bool(_row_value(r, "exceeded"))),
                         0.0 if math.isnan(dist) else dist, 0 if math.isnan(dist) else 1,
                         tuple(int(psi == p) for p in PSI_CLASSES))
        out[key] = out[key].merge(s) if key in out else s
    return dict(sorted(out.items()))


def merge_summaries(*parts: dict[tuple, GroupSummary]) -> dict[tuple, GroupSummary]:
    out: dict[tuple, GroupSummary] = {}
    for part in parts:
        for k, s in part.items():
            out[k] = out[k].merge(s) if k in out else s
    return dict(sorted(out.items()))


def read_report_csv(text: str) -> list[dict]:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        rows.append({"model_id": int(d["model_id"]), "n": int(d["n"]), "replicate": int(d["replicate"]),
                     "error_kind": d["error_kind"], "psi_class": d["psi_class"],
                     "distance": float(d["distance"]) if d["distance"] else float("nan"),
                     "exceeded": d["exceeded"] == "1",
                     "runtime_ms": float(d["runtime_ms"]) if d["runtime_ms"] else None})
    return rows


# ----------------------------------------------------------------------------
# CI-test contract: per-triple rejection rates on exact-epsilon triples


@dataclass(frozen=True)
class ContractTriple:
    model_id: int
    x: int
    y: int
    cond: tuple[int, ...]
    epsilon: float

    @property
    def null(self) -> bool:
        return self.epsilon <= 1e-9


def contract_triples(model, model_id: int = 0, delta: float = 0.05, max_cond: int = 3,
                     alt_cap: float | None = None) -> list[ContractTriple]:
    """Triples with exact epsilon zero or at least ``delta`` (capped above by ``alt_cap``)."""
    net = model.network
    out = []
    for x, y in itertools.combinations(range(model.dag.n_vars), 2):
        rest = [v for v in range(model.dag.n_vars) if v not in (x, y)]
        for r in range(min(max_cond, len(rest)) + 1):
            for S in itertools.combinations(rest, r):
                e = net.epsilon(x, y, list(S))
                if e <= 1e-9 or (e >= delta and (alt_cap is None or e < alt_cap)):
                    out.append(ContractTriple(model_id, x, y, S, float(e)))
    return out


def contract_statistics(model, triples: Sequence[ContractTriple], n: int, replicates: int,
                        seed: int) -> np.ndarray:
    """epsilon-hat for every (replicate, triple); decisions for any c follow by thresholding."""
    from .citest import epsilon_hat

    stats = np.empty((replicates, len(triples)))
    seeds = np.random.SeedSequence(seed).generate_state(replicates)
    for r in range(replicates):
        data = model.sample(n, int(seeds[r]))
        for j, t in enumerate(triples):
            stats[r, j] = epsilon_hat(data, t.x, t.y, t.cond)
    return stats


def contract_rates(triples: Sequence[ContractTriple], stats: np.ndarray, n: int,
                   schedule: TestSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Per-triple rejection rate on null triples and acceptance rate on the rest."""
    thr = np.array([schedule.threshold(n, 2 + len(t.cond)) for t in triples])
    reject = (stats > thr).mean(axis=0)
    null = np.array([t.null for t in triples])
    return reject[null], 1.0 - reject[~null]
