"""Directed and mixed graphs, d-separation and Markov equivalence.

Variables are dense integer indices ``0..p-1``; names are carried alongside
for serialization.  Every graph value is immutable once built.  Algorithms
that need to mutate orientations work on the private :class:`_PDAG` and
freeze the result.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_MAX_VARS = 12

Edge = tuple[int, int]
Triple = tuple[int, int, int]


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    pass


class NotExtendableError(GraphError):
    """Raised when a pattern admits no consistent DAG extension."""


class TripleMark(enum.Enum):
    COLLIDER = "collider"
    NONCOLLIDER = "noncollider"
    AMBIGUOUS = "ambiguous"


class TripleType(enum.Enum):
    UNSHIELDED_COLLIDER = "unshielded_collider"
    SHIELDED_COLLIDER = "shielded_collider"
    UNSHIELDED_NONCOLLIDER = "unshielded_noncollider"
    SHIELDED_NONCOLLIDER = "shielded_noncollider"


class NonAdjacency(enum.Enum):
    APPARENT = "apparent"
    DEFINITE = "definite"


def pair(a: int, b: int) -> Edge:
    """Canonical key for an unordered pair."""
    return (a, b) if a < b else (b, a)


def triple_key(x: int, y: int, z: int) -> Triple:
    """Canonical key for a triple; endpoints are unordered."""
    return (x, y, z) if x < z else (z, y, x)


def _default_names(p: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(p))


def _check_names(names: Sequence[str]) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if len(set(names)) != len(names):
        raise GraphError(f"variable names must be unique: {names}")
    return names


@dataclass(frozen=True)
class Dag:
    """A DAG over variables ``0..len(names)-1``."""

    names: tuple[str, ...]
    edges: frozenset[Edge]

    def __post_init__(self):
        object.__setattr__(self, "names", _check_names(self.names))
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        p = len(self.names)
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop on {self.names[a]}")
            if not (0 <= a < p and 0 <= b < p):
                raise GraphError(f"edge {(a, b)} out of range for {p} variables")
        if not is_acyclic(self.edges, p):
            raise CycleError("edge set contains a directed cycle")

    @classmethod
    def from_edges(cls, names: Sequence[str] | int, edges: Iterable) -> "Dag":
        """Build from edges given either as indices or as names."""
        if isinstance(names, int):
            names = _default_names(names)
        names = tuple(names)
        index = {n: i for i, n in enumerate(names)}
        out = set()
        for a, b in edges:
            a = index[a] if isinstance(a, str) else a
            b = index[b] if isinstance(b, str) else b
            out.add((a, b))
        return cls(names, frozenset(out))

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def vars(self) -> range:
        return range(self.n_vars)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        pa: list[list[int]] = [[] for _ in self.vars]
        for a, b in self.edges:
            pa[b].append(a)
        return tuple(tuple(sorted(x)) for x in pa)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in self.vars]
        for a, b in self.edges:
            ch[a].append(b)
        return tuple(tuple(sorted(x)) for x in ch)

    @cached_property
    def skeleton(self) -> frozenset[Edge]:
        return frozenset(pair(a, b) for a, b in self.edges)

    def adjacent(self, a: int, b: int) -> bool:
        return pair(a, b) in self.skeleton

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        return tuple(topological_sort(self.edges, self.n_vars))

    def descendants(self, v: int) -> frozenset[int]:
        """Proper descendants of ``v``."""
        seen: set[int] = set()
        stack = list(self.children[v])
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(self.children[u])
        return frozenset(seen)

    def ancestors_of(self, nodes: Iterable[int]) -> frozenset[int]:
        """``nodes`` together with all their ancestors."""
        seen = set(nodes)
        stack = list(seen)
        while stack:
            u = stack.pop()
            for w in self.parents[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return frozenset(seen)

    def is_ancestral(self, nodes: Iterable[int]) -> bool:
        nodes = frozenset(nodes)
        return self.ancestors_of(nodes) == nodes

    @cached_property
    def unshielded_colliders(self) -> frozenset[Triple]:
        out = set()
        for y in self.vars:
            for x, z in itertools.combinations(self.parents[y], 2):
                if not self.adjacent(x, z):
                    out.add(triple_key(x, y, z))
        return frozenset(out)

    def triangles(self) -> Iterator[tuple[int, int, int]]:
        """Yield each 3-clique of the skeleton once, as sorted indices."""
        for a, b, c in itertools.combinations(self.vars, 3):
            if self.adjacent(a, b) and self.adjacent(b, c) and self.adjacent(a, c):
                yield a, b, c


def topological_sort(edges: Iterable[Edge], n_vars: int) -> list[int]:
    """Kahn's algorithm; smallest available index first.  Raises on cycles."""
    indeg = [0] * n_vars
    succ: list[list[int]] = [[] for _ in range(n_vars)]
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    ready = [v for v in range(n_vars) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != n_vars:
        raise CycleError("graph has a directed cycle")
    return order


def is_acyclic(g: "Dag | Iterable[Edge]", n_vars: int | None = None) -> bool:
    """True iff the directed edge set admits a topological order."""
    if isinstance(g, Dag):
        edges, n_vars = g.edges, g.n_vars
    else:
        edges = list(g)
        if n_vars is None:
            n_vars = 1 + max((max(e) for e in edges), default=-1)
    try:
        topological_sort(edges, n_vars)
    except CycleError:
        return False
    return True


# ----------------------------------------------------------------------------
# d-separation


def d_separated(g: Dag, x: int, y: int, cond: Iterable[int] = ()) -> bool:
    """Reachability ("Bayes-ball") test of x _||_ y | cond in ``g``."""
    cond = frozenset(cond)
    if x == y:
        raise GraphError("d_separated needs two distinct variables")
    for v in (x, y, *cond):
        if not 0 <= v < g.n_vars:
            raise GraphError(f"invalid variable id {v}")
    if x in cond or y in cond:
        raise GraphError("endpoints may not be in the conditioning set")

    anc = g.ancestors_of(cond)
    # state: (node, arrived_from_child) -- True means we came up a tail
    # (ball travelling against edge direction), False means down an arrow
    visited: set[tuple[int, bool]] = set()
    queue = deque([(x, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == y:
            return False
        if up and v not in cond:
            for w in g.parents[v]:
                queue.append((w, True))
            for w in g.children[v]:
                queue.append((w, False))
        elif not up:
            if v not in cond:
                for w in g.children[v]:
                    queue.append((w, False))
            if v in anc:
                for w in g.parents[v]:
                    queue.append((w, True))
    return True


# ----------------------------------------------------------------------------
# Triples, equivalence, patterns


def classify_triples(g: Dag) -> dict[Triple, TripleType]:
    """Classify every path <X,Y,Z> of adjacent pairs, keyed unordered on X, Z."""
    out = {}
    for y in g.vars:
        nbrs = sorted(set(g.parents[y]) | set(g.children[y]))
        pa = set(g.parents[y])
        for x, z in itertools.combinations(nbrs, 2):
            collider = x in pa and z in pa
            shielded = g.adjacent(x, z)
            if collider:
                t = TripleType.SHIELDED_COLLIDER if shielded else TripleType.UNSHIELDED_COLLIDER
            else:
                t = TripleType.SHIELDED_NONCOLLIDER if shielded else TripleType.UNSHIELDED_NONCOLLIDER
            out[(x, y, z)] = t
    return out


def markov_equivalent(g1: Dag, g2: Dag) -> bool:
    """Same adjacencies and same unshielded colliders."""
    if g1.n_vars != g2.n_vars:
        raise GraphError("graphs are over different variable sets")
    return g1.skeleton == g2.skeleton and g1.unshielded_colliders == g2.unshielded_colliders


@dataclass(frozen=True)
class Pattern:
    """Mixed graph of compelled (directed) and reversible (undirected) edges."""

    names: tuple[str, ...]
    directed: frozenset[Edge]
    undirected: frozenset[Edge]

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @cached_property
    def skeleton(self) -> frozenset[Edge]:
        return frozenset(pair(a, b) for a, b in self.directed) | self.undirected


@dataclass(frozen=True)
class MixedGraph:
    """VCSGS output graph: edges plus triple marks and non-adjacency status.

    ``triple_marks`` is keyed by :func:`triple_key`; ``nonadjacency`` by
    :func:`pair` and covers exactly the non-adjacent pairs.
    """

    names: tuple[str, ...]
    directed: frozenset[Edge]
    undirected: frozenset[Edge]
    triple_marks: Mapping[Triple, TripleMark] = field(default_factory=dict)
    nonadjacency: Mapping[Edge, NonAdjacency] = field(default_factory=dict)

    def __post_init__(self):
        dpairs = {pair(a, b) for a, b in self.directed}
        if len(dpairs) != len(self.directed):
            raise GraphError("edge oriented both ways")
        if dpairs & set(self.undirected):
            raise GraphError("pair is both directed and undirected")
        skel = dpairs | set(self.undirected)
        for (x, y, z) in self.triple_marks:
            if pair(x, y) not in skel or pair(y, z) not in skel or pair(x, z) in skel:
                raise GraphError(f"marked triple {(x, y, z)} is not unshielded")
        expected = {pair(a, b) for a, b in itertools.combinations(range(len(self.names)), 2)} - skel
        if self.nonadjacency and set(self.nonadjacency) != expected:
            raise GraphError("nonadjacency keys must be exactly the non-adjacent pairs")
        if not self.nonadjacency:
            object.__setattr__(self, "nonadjacency", {k: NonAdjacency.APPARENT for k in sorted(expected)})

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @cached_property
    def skeleton(self) -> frozenset[Edge]:
        return frozenset(pair(a, b) for a, b in self.directed) | self.undirected

    def adjacent(self, a: int, b: int) -> bool:
        return pair(a, b) in self.skeleton

    def parents(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, b in self.directed if b == v))

    def undirected_neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(b if a == v else a for a, b in self.undirected if v in (a, b)))

    def marked(self, mark: TripleMark) -> frozenset[Triple]:
        return frozenset(t for t, m in self.triple_marks.items() if m is mark)

    def pattern(self) -> Pattern:
        return Pattern(self.names, frozenset(self.directed), frozenset(self.undirected))


# ----------------------------------------------------------------------------
# Mutable partially directed graph used by orientation routines


class _PDAG:
    def __init__(self, n_vars: int, directed=(), undirected=(), noncolliders=()):
        self.n = n_vars
        self.directed: set[Edge] = set(directed)
        self.undirected: set[Edge] = {pair(a, b) for a, b in undirected}
        self.noncolliders: set[Triple] = {triple_key(*t) for t in noncolliders}

    def copy(self) -> "_PDAG":
        return _PDAG(self.n, self.directed, self.undirected, self.noncolliders)

    def adjacent(self, a, b) -> bool:
        return pair(a, b) in self.undirected or (a, b) in self.directed or (b, a) in self.directed

    def is_undirected(self, a, b) -> bool:
        return pair(a, b) in self.undirected

    def orient(self, a, b) -> bool:
        """Orient a-b as a->b.  Returns False on conflict with b->a."""
        if (a, b) in self.directed:
            return True
        if (b, a) in self.directed:
            return False
        self.undirected.discard(pair(a, b))
        self.directed.add((a, b))
        return True

    def parents(self, v):
        return [a for a, b in self.directed if b == v]

    def children(self, v):
        return [b for a, b in self.directed if a == v]

    def undirected_nbrs(self, v):
        return [b if a == v else a for a, b in self.undirected if v in (a, b)]

    def apply_rules(self, log: list | None = None) -> None:
        """Close under the three orientation rules until none applies."""
        changed = True
        while changed:
            changed = False
            for rule in (self._rule_a, self._rule_b, self._rule_c):
                hit = rule()
                if hit is not None:
                    if log is not None:
                        log.append(hit)
                    changed = True
                    break

    # X -> Y - Z with <X,Y,Z> marked non-collider  =>  Y -> Z
    def _rule_a(self):
        for x, y in sorted(self.directed):
            for z in sorted(self.undirected_nbrs(y)):
                if z != x and triple_key(x, y, z) in self.noncolliders:
                    self.orient(y, z)
                    return {"rule": "a", "oriented": [y, z], "via": [x, y, z]}
        return None

    # X -> Y -> Z and X - Z  =>  X -> Z
    def _rule_b(self):
        for x, y in sorted(self.directed):
            for z in sorted(self.children(y)):
                if self.is_undirected(x, z):
                    self.orient(x, z)
                    return {"rule": "b", "oriented": [x, z], "via": [x, y, z]}
        return None

    # X -> Y <- Z, <X,W,Z> marked non-collider and W - Y  =>  W -> Y
    def _rule_c(self):
        for (x, w, z) in sorted(self.noncolliders):
            for y in sorted(self.undirected_nbrs(w)):
                if y in (x, z):
                    continue
                if (x, y) in self.directed and (z, y) in self.directed:
                    self.orient(w, y)
                    return {"rule": "c", "oriented": [w, y], "via": [x, w, z, y]}
        return None


def _unshielded_noncolliders(g: Dag) -> set[Triple]:
    return {t for t, k in classify_triples(g).items() if k is TripleType.UNSHIELDED_NONCOLLIDER}


def pattern_of(g: Dag) -> Pattern:
    """Compelled-edge pattern of the Markov equivalence class of ``g``."""
    pd = _PDAG(g.n_vars, undirected=g.skeleton, noncolliders=_unshielded_noncolliders(g))
    for x, y, z in sorted(g.unshielded_colliders):
        pd.orient(x, y)
        pd.orient(z, y)
    pd.apply_rules()
    return Pattern(g.names, frozenset(pd.directed), frozenset(pd.undirected))


def consistent_dag_extension(p: "Pattern | MixedGraph") -> Dag:
    """One member DAG of the class (Dor and Tarsi's sink-elimination).

    Undirected edges are oriented without creating cycles or unshielded
    colliders absent from ``p``.
    """
    n = p.n_vars
    directed = set(p.directed)
    undirected = {pair(a, b) for a, b in p.undirected}
    alive = set(range(n))
    out = set(directed)

    def adj(a, b):
        return pair(a, b) in undirected or (a, b) in directed or (b, a) in directed

    while alive:
        for v in sorted(alive):
            if any(a == v and b in alive for a, b in directed):
                continue
            und = [b if a == v else a for a, b in undirected if v in (a, b)]
            nbrs = {b if a == v else a for a, b in undirected if v in (a, b)}
            nbrs |= {a for a, b in directed if b == v and a in alive}
            if all(adj(u, w) for u in und for w in nbrs if w != u):
                break
        else:
            raise NotExtendableError("pattern admits no consistent DAG extension")
        for u in [b if a == v else a for a, b in undirected if v in (a, b)]:
            out.add((u, v))
            undirected.discard(pair(u, v))
        directed = {(a, b) for a, b in directed if v not in (a, b)}
        undirected = {e for e in undirected if v not in e}
        alive.remove(v)
    return Dag(p.names, frozenset(out))


def _closed_graph_is_pattern(pd: _PDAG, names) -> Pattern | None:
    """Extend ``pd`` and check it is exactly the pattern of its extension."""
    pat = Pattern(tuple(names), frozenset(pd.directed), frozenset(pd.undirected))
    try:
        ext = consistent_dag_extension(pat)
    except NotExtendableError:
        return None
    if any(t in ext.unshielded_colliders for t in pd.noncolliders):
        return None
    if pattern_of(ext) != pat:
        return None
    return pat


def disambiguations(m: MixedGraph) -> Iterator[tuple[dict[Triple, TripleMark], Pattern]]:
    """Yield (assignment, pattern) for each consistent disambiguation."""
    ambiguous = sorted(m.marked(TripleMark.AMBIGUOUS))
    noncol = m.marked(TripleMark.NONCOLLIDER)
    for choice in itertools.product((TripleMark.COLLIDER, TripleMark.NONCOLLIDER), repeat=len(ambiguous)):
        pd = _PDAG(m.n_vars, m.directed, m.undirected, noncol)
        ok = True
        for (x, y, z), mark in zip(ambiguous, choice):
            if mark is TripleMark.COLLIDER:
                ok = pd.orient(x, y) and pd.orient(z, y)
                if not ok:
                    break
            else:
                pd.noncolliders.add((x, y, z))
        if not ok:
            continue
        pd.apply_rules()
        pat = _closed_graph_is_pattern(pd, m.names)
        if pat is not None:
            yield dict(zip(ambiguous, choice)), pat


def consistent_disambiguations(m: MixedGraph) -> list[Pattern]:
    """Patterns obtained from every valid collider/non-collider assignment."""
    return [pat for _, pat in disambiguations(m)]


def all_dags(n_vars: int, names: Sequence[str] | None = None) -> Iterator[Dag]:
    """Enumerate every labeled DAG on ``n_vars`` nodes (543 for four)."""
    names = tuple(names) if names is not None else _default_names(n_vars)
    pairs = list(itertools.combinations(range(n_vars), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (a, b), s in zip(pairs, states):
            if s == 1:
                edges.append((a, b))
            elif s == 2:
                edges.append((b, a))
        if is_acyclic(edges, n_vars):
            yield Dag(names, frozenset(edges))


def pattern_from_mixed(m: MixedGraph) -> Pattern:
    return m.pattern()


def mixed_from_pattern(p: Pattern, g: Dag | None = None) -> MixedGraph:
    """Wrap a pattern as a MixedGraph; unshielded triples get marks from ``g``."""
    marks = {}
    if g is not None:
        for t, kind in classify_triples(g).items():
            if kind is TripleType.UNSHIELDED_COLLIDER:
                marks[t] = TripleMark.COLLIDER
            elif kind is TripleType.UNSHIELDED_NONCOLLIDER:
                marks[t] = TripleMark.NONCOLLIDER
    return MixedGraph(p.names, p.directed, p.undirected, marks)
