from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"  # supported on [0, 1]
REAL = "real"  # unbounded, linear-Gaussian data

KINDS = (DISCRETE, CONTINUOUS, REAL)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: str
    cardinality: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == DISCRETE and (self.cardinality is None or self.cardinality < 1):
            raise ValueError(f"discrete variable {self.name} needs a state count")


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` sample with per-column schema and the seed that drew it."""

    schema: tuple[VariableSpec, ...]
    values: np.ndarray
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[1] != len(self.schema):
            raise ValueError(f"values shape {values.shape} does not match {len(self.schema)} columns")
        if values.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        for j, spec in enumerate(self.schema):
            col = values[:, j]
            if spec.kind == DISCRETE:
                if np.any(col != np.round(col)) or col.min() < 0 or col.max() >= spec.cardinality:
                    raise ValueError(f"column {spec.name} outside states 0..{spec.cardinality - 1}")
            elif spec.kind == CONTINUOUS:
                if col.min() < 0.0 or col.max() > 1.0:
                    raise ValueError(f"column {spec.name} outside [0, 1]")
        if all(s.kind == DISCRETE for s in self.schema):
            values = values.astype(np.int64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, names: Sequence[str], kinds, cardinalities=None, seed=None) -> "Dataset":
        if isinstance(kinds, str):
            kinds = [kinds] * len(names)
        if cardinalities is None:
            cardinalities = [None] * len(names)
        schema = tuple(VariableSpec(n, k, c) for n, k, c in zip(names, kinds, cardinalities))
        return cls(schema, np.asarray(values), seed)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.schema)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(s.kind for s in self.schema)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def is_discrete(self, cols=None) -> bool:
        cols = range(len(self.schema)) if cols is None else cols
        return all(self.schema[j].kind == DISCRETE for j in cols)

    def head(self, n: int) -> "Dataset":
        return Dataset(self.schema, self.values[:n], self.seed, dict(self.provenance))
