"""Very Conservative SGS and the three error kinds.

``vcsgs`` consumes any decision source ``ci(x, y, cond)`` returning either a
bool (True = independent) or an object with an ``independent`` attribute.
Answers are cached per run on ``(min(x,y), max(x,y), frozenset(cond))``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .graph import (DEFAULT_MAX_VARS, Dag, MixedGraph, NonAdjacency, Pattern, TripleMark, TripleType, _PDAG,
                    classify_triples, consistent_dag_extension, disambiguations, pair, triple_key)

MAX_AMBIGUOUS = 12


class SubsetBudgetError(RuntimeError):
    pass


class ErrorKind(enum.Enum):
    NONE = "none"
    KIND_I = "I"
    KIND_II = "II"
    KIND_III = "III"


@dataclass(frozen=True)
class ErrorReport:
    kind: ErrorKind
    witness: Any = None

    def __bool__(self) -> bool:
        return self.kind is not ErrorKind.NONE


@dataclass(frozen=True)
class VcsgsOutput:
    graph: MixedGraph
    trace: list = field(default_factory=list)
    step5_passed: bool = False

    def events(self, step: int) -> list[dict]:
        return [e for e in self.trace if e["step"] == step]


class _CachedCI:
    def __init__(self, ci: Callable):
        self.ci = ci
        self.cache: dict = {}
        self.calls = 0

    def __call__(self, x: int, y: int, cond: Iterable[int]) -> bool:
        key = (min(x, y), max(x, y), frozenset(cond))
        if key not in self.cache:
            self.calls += 1
            ans = self.ci(key[0], key[1], tuple(sorted(key[2])))
            self.cache[key] = bool(getattr(ans, "independent", ans))
        return self.cache[key]


def _subsets(pool: Sequence[int]):
    """All subsets by increasing size, lexicographic within a size."""
    for r in range(len(pool) + 1):
        yield from itertools.combinations(pool, r)


def vcsgs(ci: Callable, vars: int | Sequence[str], max_vars: int = DEFAULT_MAX_VARS) -> VcsgsOutput:
    """Run steps 1-5 of Very Conservative SGS over the decision source ``ci``."""
    names = tuple(f"X{i}" for i in range(vars)) if isinstance(vars, int) else tuple(vars)
    p = len(names)
    if p > max_vars:
        raise SubsetBudgetError(f"{p} variables exceeds the exhaustive-search cap of {max_vars}")
    test = _CachedCI(ci)
    trace: list[dict] = []
    V = list(range(p))

    # steps 1-2: start complete, remove x-y iff some subset separates them
    adj = {pair(a, b) for a, b in itertools.combinations(V, 2)}
    for x, y in itertools.combinations(V, 2):
        pool = [v for v in V if v not in (x, y)]
        for S in _subsets(pool):
            if test(x, y, S):
                adj.discard((x, y))
                trace.append({"step": 2, "event": "remove", "pair": [x, y], "sepset": list(S)})
                break

    def adjacent(a, b):
        return pair(a, b) in adj

    # step 3: classify each unshielded triple from all subsets of V minus {X,Z}
    marks: dict = {}
    colliders = []
    for y in V:
        nbrs = [v for v in V if v != y and adjacent(v, y)]
        for x, z in itertools.combinations(nbrs, 2):
            if adjacent(x, z):
                continue
            pool = [v for v in V if v not in (x, z)]
            indep_with, indep_without, n_with = [], [], 0
            for S in _subsets(pool):
                if y in S:
                    n_with += 1
                if test(x, z, S):
                    (indep_with if y in S else indep_without).append(list(S))
            key = triple_key(x, y, z)
            if not indep_with:
                mark = TripleMark.COLLIDER
                colliders.append(key)
            elif not indep_without:
                mark = TripleMark.NONCOLLIDER
            else:
                mark = TripleMark.AMBIGUOUS
            marks[key] = mark
            trace.append({"step": 3, "event": "triple", "triple": list(key), "mark": mark.value,
                          "subsets_with": n_with, "independent_with": indep_with,
                          "independent_without": indep_without})

    pd = _PDAG(p, undirected=adj, noncolliders=[t for t, m in marks.items() if m is TripleMark.NONCOLLIDER])
    for x, y, z in colliders:
        trial = pd.copy()
        if trial.orient(x, y) and trial.orient(z, y):
            pd = trial
        else:
            # conflicting arrowheads: demote to ambiguous and let step 5 decide
            marks[(x, y, z)] = TripleMark.AMBIGUOUS
            trace.append({"step": 3, "event": "conflict", "triple": [x, y, z]})

    # step 4: orientation rules to closure
    fired: list = []
    pd.apply_rules(fired)
    trace.extend({"step": 4, "event": "rule", **f} for f in fired)

    graph = MixedGraph(names, frozenset(pd.directed), frozenset(pd.undirected), marks)

    # step 5: Markov check of every consistent disambiguation
    n_amb = len(graph.marked(TripleMark.AMBIGUOUS))
    passed = False
    if n_amb > MAX_AMBIGUOUS:
        trace.append({"step": 5, "event": "abort", "reason": "cannot disambiguate", "ambiguous": n_amb})
    else:
        passed, n_checked = True, 0
        for assignment, pat in disambiguations(graph):
            n_checked += 1
            ok, failure = _markov_check(pat, test)
            trace.append({"step": 5, "event": "disambiguation",
                          "assignment": [[list(t), m.value] for t, m in sorted(assignment.items())],
                          "markov": ok, **({"failed": failure} if failure else {})})
            if not ok:
                passed = False
                break
        if n_checked == 0:
            passed = False
        trace.append({"step": 5, "event": "verdict", "passed": passed, "patterns": n_checked})
    if passed:
        graph = MixedGraph(names, graph.directed, graph.undirected, marks,
                           {k: NonAdjacency.DEFINITE for k in graph.nonadjacency})
    return VcsgsOutput(graph, trace, passed)


def _markov_check(pat: Pattern, test: _CachedCI) -> tuple[bool, list | None]:
    """Local Markov condition of one extension, as pairwise queries."""
    g = consistent_dag_extension(pat)
    for v in g.vars:
        pa = g.parents[v]
        nd = set(g.vars) - g.descendants(v) - set(pa) - {v}
        for u in sorted(nd):
            if not test(v, u, pa):
                return False, [v, u, list(pa)]
    return True, None


# ----------------------------------------------------------------------------


def classify_error(out: "VcsgsOutput | MixedGraph", truth: Dag) -> ErrorReport:
    """First matching error kind; missing edges are never errors."""
    g = out.graph if isinstance(out, VcsgsOutput) else out
    if g.n_vars != truth.n_vars:
        raise ValueError("output and truth are over different variable sets")
    for e in sorted(g.skeleton):
        if e not in truth.skeleton:
            return ErrorReport(ErrorKind.KIND_I, {"adjacency": list(e)})
    true_types = classify_triples(truth)
    for t in sorted(g.marked(TripleMark.NONCOLLIDER)):
        kind = true_types.get(t)
        if kind in (TripleType.UNSHIELDED_COLLIDER, TripleType.SHIELDED_COLLIDER):
            return ErrorReport(ErrorKind.KIND_II, {"noncollider": list(t), "truth": kind.value})
    for a, b in sorted(g.directed):
        if (a, b) not in truth.edges:
            return ErrorReport(ErrorKind.KIND_III, {"orientation": [a, b]})
    return ErrorReport(ErrorKind.NONE)


def estimable_vertices(out: "VcsgsOutput | MixedGraph") -> frozenset[int]:
    """Vertices with every incident edge oriented."""
    g = out.graph if isinstance(out, VcsgsOutput) else out
    touched = {v for e in g.undirected for v in e}
    return frozenset(v for v in range(g.n_vars) if v not in touched)


def estimated_parents(out: "VcsgsOutput | MixedGraph", v: int) -> tuple[int, ...]:
    g = out.graph if isinstance(out, VcsgsOutput) else out
    return g.parents(v)
