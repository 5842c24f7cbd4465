"""JSON / CSV formats for models, datasets, graphs, estimates and traces.

Floats go through ``json`` (shortest repr) so model files round-trip
exactly.  NaN entries of estimated tables are written as ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .estimation import ConditionalTable, EstimatedModel, UNKNOWN, VertexEstimate
from .graph import Dag, MixedGraph, NonAdjacency, TripleMark, pair
from .scm import ContinuousSmoothModel, Dataset, DiscreteModel, LinearGaussianModel, VariableSpec
from .scm.continuous import conditional_from_dict
from .scm.dataset import DISCRETE, REAL


class FormatError(ValueError):
    pass


def atomic_write(path: "str | Path", text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=1, sort_keys=False) + "\n")


def read_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _nan_to_none(a: np.ndarray):
    if a.ndim == 0:
        v = float(a)
        return None if np.isnan(v) else v
    return [_nan_to_none(x) for x in a]


def _none_to_nan(x) -> np.ndarray:
    return np.array(x if not isinstance(x, list) else _fill(x), dtype=float)


def _fill(x):
    return [float("nan") if v is None else (_fill(v) if isinstance(v, list) else v) for v in x]


# ---------------------------------------------------------------- models


def model_to_dict(m) -> dict:
    base = {"family": m.family, "vars": list(m.dag.names), "edges": [list(e) for e in sorted(m.dag.edges)]}
    if isinstance(m, DiscreteModel):
        base.update(cardinalities=list(m.cardinalities), cpts=[t.tolist() for t in m.cpts])
    elif isinstance(m, ContinuousSmoothModel):
        base.update(smoothness_L=m.smoothness_L, floor_T=m.floor_T,
                    conditionals=[{"floor_weight": c.floor_weight, "intercept": c.intercept,
                                   "slopes": list(c.slopes), "scale": c.scale} for c in m.conditionals])
    elif isinstance(m, LinearGaussianModel):
        base.update(coefficients=[[s, t, a] for (s, t), a in sorted(m.coefficients.items())],
                    noise_variances=list(m.noise_variances))
    else:
        raise TypeError(f"cannot serialize {type(m).__name__}")
    return base


def model_from_dict(d: dict):
    try:
        dag = Dag.from_edges(d["vars"], [tuple(e) for e in d["edges"]])
        fam = d["family"]
        if fam == "discrete":
            return DiscreteModel(dag, tuple(d["cardinalities"]), tuple(np.array(t, dtype=float) for t in d["cpts"]))
        if fam == "continuous":
            return ContinuousSmoothModel(dag, tuple(conditional_from_dict(c) for c in d["conditionals"]),
                                         d["smoothness_L"], d["floor_T"])
        if fam == "gaussian":
            return LinearGaussianModel(dag, {(int(s), int(t)): float(a) for s, t, a in d["coefficients"]},
                                       tuple(d["noise_variances"]))
    except KeyError as exc:
        raise FormatError(f"model file missing field {exc}") from exc
    raise FormatError(f"unknown model family {d.get('family')!r}")


def save_model(path, m) -> None:
    write_json(path, model_to_dict(m))


def load_model(path):
    return model_from_dict(read_json(path))


# ---------------------------------------------------------------- datasets


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data.names)
    kinds = data.kinds
    for row in data.values:
        w.writerow([str(int(v)) if k == DISCRETE else repr(float(v)) for v, k in zip(row, kinds)])
    return buf.getvalue()


def dataset_meta(data: Dataset) -> dict:
    return {"schema": [{"name": s.name, "kind": s.kind, "cardinality": s.cardinality} for s in data.schema],
            "seed": data.seed, "n": data.n, "provenance": data.provenance}


def save_dataset(path, data: Dataset, extra_meta: dict | None = None) -> None:
    atomic_write(path, dataset_to_csv(data))
    write_json(sidecar_path(path), {**dataset_meta(data), **(extra_meta or {})})


def load_dataset(path) -> Dataset:
    meta_path = sidecar_path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    if meta_path.exists():
        meta = read_json(meta_path)
        schema = tuple(VariableSpec(s["name"], s["kind"], s.get("cardinality")) for s in meta["schema"])
        seed = meta.get("seed")
    else:
        # no sidecar: integer columns are discrete, floats are real-valued
        cols = list(zip(*body)) if body else [()] * len(header)
        schema = tuple(VariableSpec(n, DISCRETE, max(int(v) for v in c) + 1)
                       if all(v.lstrip("-").isdigit() for v in c) else VariableSpec(n, REAL)
                       for n, c in zip(header, cols))
        seed = None
    if [s.name for s in schema] != header:
        raise FormatError(f"{path}: header does not match sidecar schema")
    try:
        values = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from exc
    return Dataset(schema, values, seed)


# ---------------------------------------------------------------- graphs


def graph_to_dict(g: MixedGraph) -> dict:
    return {"vars": list(g.names),
            "directed": [list(e) for e in sorted(g.directed)],
            "undirected": [list(e) for e in sorted(g.undirected)],
            "marks": [{"triple": list(t), "mark": m.value} for t, m in sorted(g.triple_marks.items())],
            "nonadjacency": [{"pair": list(p), "status": s.value} for p, s in sorted(g.nonadjacency.items())]}


def graph_from_dict(d: dict) -> MixedGraph:
    try:
        return MixedGraph(tuple(d["vars"]),
                          frozenset(tuple(e) for e in d["directed"]),
                          frozenset(pair(*e) for e in d["undirected"]),
                          {tuple(m["triple"]): TripleMark(m["mark"]) for m in d.get("marks", [])},
                          {pair(*p["pair"]): NonAdjacency(p["status"]) for p in d.get("nonadjacency", [])})
    except KeyError as exc:
        raise FormatError(f"graph file missing field {exc}") from exc


def save_graph(path, g: MixedGraph) -> None:
    write_json(path, graph_to_dict(g))


def load_graph(path) -> MixedGraph:
    return graph_from_dict(read_json(path))


# ---------------------------------------------------------------- estimates


def estimate_to_dict(est: EstimatedModel) -> dict:
    entries = []
    for v in range(len(est.names)):
        e = est.entries.get(v)
        if e is UNKNOWN:
            entries.append("unknown")
            continue
        c = e.cond
        entries.append({"parents": list(e.parents), "table": _nan_to_none(c.table),
                        "low_mass": c.low_mass.tolist(), "parent_bins": [a.tolist() for a in c.pa_centers],
                        "bins": c.y_centers.tolist(), "y_width": c.y_width,
                        "pa_discrete": list(c.pa_discrete), "y_discrete": c.y_discrete})
    return {"graph": graph_to_dict(est.graph), "aborted": est.aborted,
            "reasons": {str(k): v for k, v in sorted(est.reasons.items())}, "entries": entries}


def estimate_from_dict(d: dict) -> EstimatedModel:
    g = graph_from_dict(d["graph"])
    entries = {}
    for v, e in enumerate(d["entries"]):
        if e == "unknown":
            entries[v] = UNKNOWN
            continue
        cond = ConditionalTable(_none_to_nan(e["table"]), np.array(e["low_mass"], dtype=bool),
                                tuple(np.array(a, dtype=float) for a in e["parent_bins"]),
                                np.array(e["bins"], dtype=float), float(e["y_width"]),
                                tuple(e["pa_discrete"]), bool(e["y_discrete"]))
        entries[v] = VertexEstimate(tuple(e["parents"]), cond)
    return EstimatedModel(g, entries, {int(k): v for k, v in d.get("reasons", {}).items()}, d.get("aborted", False))


def save_estimate(path, est: EstimatedModel) -> None:
    write_json(path, estimate_to_dict(est))


def load_estimate(path) -> EstimatedModel:
    return estimate_from_dict(read_json(path))
