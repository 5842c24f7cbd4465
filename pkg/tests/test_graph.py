import itertools

import pytest
from hypothesis import given, settings, strategies as st

from ktriangle.graph import (CycleError, Dag, GraphError, MixedGraph, NonAdjacency, NotExtendableError, Pattern,
                             TripleMark, TripleType, all_dags, classify_triples, consistent_dag_extension,
                             consistent_disambiguations, d_separated, disambiguations, is_acyclic,
                             markov_equivalent, mixed_from_pattern, pair, pattern_of, topological_sort,
                             triple_key)

from oracles import all_dag_edge_sets, brute_force_patterns, dfs_has_cycle, dsep_by_paths

A, B, C, D = range(4)


def dag(n, *edges):
    return Dag.from_edges(n, edges)


# ---------------------------------------------------------------- acyclicity


def test_chain_is_acyclic():
    assert is_acyclic([(A, B), (B, C)], 3)


def test_two_cycle_is_not_acyclic():
    assert not is_acyclic([(A, B), (B, A)], 2)


def test_dag_constructor_rejects_cycles_and_self_loops():
    with pytest.raises(CycleError):
        dag(3, (A, B), (B, C), (C, A))
    with pytest.raises(GraphError):
        dag(2, (A, A))


@settings(max_examples=300, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda e: e[0] != e[1]), max_size=15))
def test_is_acyclic_matches_dfs(edges):
    assert is_acyclic(edges, 6) == (not dfs_has_cycle(edges, 6))


@settings(max_examples=100, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda e: e[0] < e[1]), max_size=15),
       st.permutations(range(6)))
def test_topological_sort_respects_edges(edges, perm):
    edges = {(perm[a], perm[b]) for a, b in edges}
    order = topological_sort(edges, 6)
    pos = {v: i for i, v in enumerate(order)}
    assert sorted(order) == list(range(6))
    assert all(pos[a] < pos[b] for a, b in edges)


def test_all_dags_counts_match_brute_force():
    for n, count in [(1, 1), (2, 3), (3, 25), (4, 543)]:
        got = {g.edges for g in all_dags(n)}
        assert len(got) == count
        assert got == set(all_dag_edge_sets(n))


# ---------------------------------------------------------------- d-separation


def test_chain_blocked_by_middle():
    g = dag(3, (A, B), (B, C))
    assert d_separated(g, A, C, {B})
    assert not d_separated(g, A, C, set())


def test_collider_semantics():
    g = dag(3, (A, B), (C, B))
    assert d_separated(g, A, C, set())
    assert not d_separated(g, A, C, {B})


def test_collider_descendant_opens_path():
    g = dag(4, (A, B), (C, B), (B, D))
    assert not d_separated(g, A, C, {D})


def test_d_separated_rejects_bad_queries():
    g = dag(3, (A, B))
    with pytest.raises(GraphError):
        d_separated(g, A, A, ())
    with pytest.raises(GraphError):
        d_separated(g, A, B, {A})
    with pytest.raises(GraphError):
        d_separated(g, A, 7, ())


@pytest.mark.parametrize("n", [3, 4])
def test_d_separation_matches_path_enumeration(n):
    mismatches = 0
    for g in all_dags(n):
        for x, y in itertools.combinations(range(n), 2):
            rest = [v for v in range(n) if v not in (x, y)]
            for r in range(len(rest) + 1):
                for S in itertools.combinations(rest, r):
                    mismatches += d_separated(g, x, y, S) != dsep_by_paths(g.edges, n, x, y, S)
    assert mismatches == 0


# ---------------------------------------------------------------- triples


def test_unshielded_collider_classified():
    assert classify_triples(dag(3, (A, B), (C, B)))[triple_key(A, B, C)] is TripleType.UNSHIELDED_COLLIDER


def test_shielded_collider_and_noncolliders():
    t = classify_triples(dag(3, (A, B), (C, B), (A, C)))
    assert t[triple_key(A, B, C)] is TripleType.SHIELDED_COLLIDER
    # C is a child of A but a parent of B: non-collider on <A,C,B>
    assert t[triple_key(A, C, B)] is TripleType.SHIELDED_NONCOLLIDER
    assert t[triple_key(C, A, B)] is TripleType.SHIELDED_NONCOLLIDER


def test_classify_triples_all_three_node_dags_by_definition():
    seen = 0
    for g in all_dags(3):
        t = classify_triples(g)
        for x, y, z in itertools.permutations(range(3)):
            if not (g.adjacent(x, y) and g.adjacent(y, z)):
                assert triple_key(x, y, z) not in t
                continue
            seen += 1
            collider = (x, y) in g.edges and (z, y) in g.edges
            shielded = g.adjacent(x, z)
            expect = {(True, False): TripleType.UNSHIELDED_COLLIDER, (True, True): TripleType.SHIELDED_COLLIDER,
                      (False, False): TripleType.UNSHIELDED_NONCOLLIDER,
                      (False, True): TripleType.SHIELDED_NONCOLLIDER}[collider, shielded]
            assert t[triple_key(x, y, z)] is expect
    assert seen > 0


def test_triple_key_is_symmetric():
    assert triple_key(3, 1, 0) == triple_key(0, 1, 3) == (0, 1, 3)


# ---------------------------------------------------------------- equivalence and patterns


def test_markov_equivalent_examples():
    assert markov_equivalent(dag(3, (A, B), (B, C)), dag(3, (C, B), (B, A)))
    assert not markov_equivalent(dag(3, (A, B), (C, B)), dag(3, (A, B), (B, C)))
    with pytest.raises(GraphError):
        markov_equivalent(dag(3), dag(4))


def test_pattern_of_collider_and_chain():
    p = pattern_of(dag(3, (A, B), (C, B)))
    assert p.directed == {(A, B), (C, B)} and not p.undirected
    p = pattern_of(dag(3, (A, B), (B, C)))
    assert not p.directed and p.undirected == {pair(A, B), pair(B, C)}


def test_pattern_rule_propagation_downstream_of_collider():
    # A -> C <- B, C -> D: D's edge compelled away from the collider
    p = pattern_of(dag(4, (A, C), (B, C), (C, D)))
    assert p.directed == {(A, C), (B, C), (C, D)}


def test_pattern_of_matches_class_enumeration_on_four_nodes():
    oracle = brute_force_patterns(4)
    for g in all_dags(4):
        compelled, reversible = oracle[g.edges]
        p = pattern_of(g)
        assert p.directed == compelled, g.edges
        assert p.undirected == reversible, g.edges


def test_all_four_node_dags_round_trip_through_extension():
    for g in all_dags(4):
        p = pattern_of(g)
        ext = consistent_dag_extension(p)
        assert markov_equivalent(ext, g)
        assert pattern_of(ext) == p
        assert ext.edges >= p.directed


def test_extension_of_fully_directed_pattern_is_itself():
    g = dag(3, (A, B), (C, B))
    assert consistent_dag_extension(pattern_of(g)) == g


def test_extension_reports_non_extendable():
    # 4-cycle of undirected edges with no chords has no collider-free orientation
    p = Pattern(("A", "B", "C", "D"), frozenset(),
                frozenset({pair(A, B), pair(B, C), pair(C, D), pair(A, D)}))
    with pytest.raises(NotExtendableError):
        consistent_dag_extension(p)


# ---------------------------------------------------------------- mixed graphs and disambiguation


def test_mixed_graph_invariants():
    names = ("A", "B", "C")
    with pytest.raises(GraphError):
        MixedGraph(names, frozenset({(A, B)}), frozenset({pair(A, B)}))
    with pytest.raises(GraphError):
        # A-B-C is shielded here, so it cannot carry a mark
        MixedGraph(names, frozenset(), frozenset({pair(A, B), pair(B, C), pair(A, C)}),
                   {(A, B, C): TripleMark.AMBIGUOUS})
    m = MixedGraph(names, frozenset({(A, B)}), frozenset())
    assert set(m.nonadjacency) == {pair(A, C), pair(B, C)}
    assert all(s is NonAdjacency.APPARENT for s in m.nonadjacency.values())


def test_zero_ambiguous_triples_gives_one_disambiguation():
    g = dag(4, (A, C), (B, C), (C, D))
    m = mixed_from_pattern(pattern_of(g), g)
    pats = consistent_disambiguations(m)
    assert pats == [pattern_of(g)]


def test_one_ambiguous_triple_both_choices_valid():
    # A - B - C with D hanging off C; <A,B,C> ambiguous, <B,C,D> non-collider
    names = tuple("ABCD")
    m = MixedGraph(names, frozenset(), frozenset({pair(A, B), pair(B, C), pair(C, D)}),
                   {(A, B, C): TripleMark.AMBIGUOUS, (B, C, D): TripleMark.NONCOLLIDER})
    out = {frozenset(a.values()): p for a, p in disambiguations(m)}
    assert len(out) == 2
    collider = out[frozenset({TripleMark.COLLIDER})]
    assert collider.directed == {(A, B), (C, B)} and collider.undirected == {pair(C, D)}
    assert out[frozenset({TripleMark.NONCOLLIDER})] == pattern_of(Dag.from_edges(names, [(A, B), (B, C), (C, D)]))


def test_collider_choice_that_closes_a_cycle_is_excluded():
    # W -> X -> Y already directed; calling <Y,W,Z> a collider needs Y -> W
    W, X, Y, Z = range(4)
    m = MixedGraph(("W", "X", "Y", "Z"), frozenset({(W, X), (X, Y)}), frozenset({pair(Y, W), pair(W, Z)}),
                   {(Y, W, Z): TripleMark.AMBIGUOUS})
    assert not is_acyclic({(W, X), (X, Y), (Y, W), (Z, W)}, 4)
    assert all(a[(Y, W, Z)] is not TripleMark.COLLIDER for a, _ in disambiguations(m))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(all_dag_edge_sets(4)))
def test_disambiguations_recover_truth_when_one_mark_hidden(edges):
    g = Dag.from_edges(4, edges)
    m = mixed_from_pattern(pattern_of(g), g)
    if not m.triple_marks:
        return
    t = sorted(m.triple_marks)[0]
    marks = dict(m.triple_marks)
    marks[t] = TripleMark.AMBIGUOUS
    arrows = {e for (x, y, z), mk in marks.items() if mk is TripleMark.COLLIDER for e in ((x, y), (z, y))}
    rest = frozenset(e for e in m.skeleton if e not in {pair(a, b) for a, b in arrows})
    hidden = MixedGraph(m.names, frozenset(arrows), rest, marks)
    assert pattern_of(g) in consistent_disambiguations(hidden)
