import itertools
import json

import numpy as np
import pytest

from ktriangle.citest import population_ci_oracle
from ktriangle.discovery import (MAX_AMBIGUOUS, ErrorKind, SubsetBudgetError, classify_error, estimable_vertices,
                                 estimated_parents, vcsgs)
from ktriangle.graph import (Dag, MixedGraph, NonAdjacency, TripleMark, all_dags, d_separated, mixed_from_pattern,
                             pair, pattern_of, triple_key)
from ktriangle.scm import DiscreteModel, ModelConstraints, random_model

A, B, C, D = range(4)


def dsep_oracle(g):
    return lambda x, y, S: d_separated(g, x, y, S)


def random_cpts(g, seed):
    rng = np.random.default_rng(seed)
    cpts = tuple(rng.dirichlet([2.0, 2.0], size=(2,) * len(g.parents[v])) for v in g.vars)
    return DiscreteModel(g, (2,) * g.n_vars, cpts)


# ---------------------------------------------------------------- oracle runs


def test_collider_recovered_and_step5_passes():
    g = Dag.from_edges(3, [(A, B), (C, B)])
    out = vcsgs(population_ci_oracle(random_cpts(g, 0)), 3)
    assert out.graph.skeleton == {pair(A, B), pair(B, C)}
    assert out.graph.directed == {(A, B), (C, B)}
    assert out.graph.triple_marks[triple_key(A, B, C)] is TripleMark.COLLIDER
    assert out.step5_passed
    assert out.graph.nonadjacency[pair(A, C)] is NonAdjacency.DEFINITE


def test_chain_recovered_as_undirected_noncollider():
    g = Dag.from_edges(3, [(A, B), (B, C)])
    out = vcsgs(population_ci_oracle(random_cpts(g, 1)), 3)
    assert out.graph.skeleton == {pair(A, B), pair(B, C)}
    assert not out.graph.directed
    assert out.graph.triple_marks[triple_key(A, B, C)] is TripleMark.NONCOLLIDER
    assert out.step5_passed


def test_empty_model_removes_every_edge_with_empty_sepset():
    out = vcsgs(lambda x, y, S: True, 4)
    assert not out.graph.skeleton
    removals = out.events(2)
    assert len(removals) == 6 and all(e["sepset"] == [] for e in removals)


def test_every_four_node_dag_recovered_from_d_separation():
    for g in all_dags(4):
        out = vcsgs(dsep_oracle(g), g.names)
        assert out.graph.pattern() == pattern_of(g), g.edges
        assert not classify_error(out, g)
        assert out.step5_passed


@pytest.mark.parametrize("seed", range(8))
def test_population_oracle_on_generated_models(seed):
    m = random_model("discrete", ModelConstraints(), seed=seed)
    out = vcsgs(population_ci_oracle(m), m.dag.names)
    assert out.graph.pattern() == pattern_of(m.dag)
    assert classify_error(out, m.dag).kind is ErrorKind.NONE
    assert out.step5_passed


# ---------------------------------------------------------------- trace audit


@pytest.mark.parametrize("seed", range(4))
def test_trace_is_replayable(seed):
    m = random_model("discrete", ModelConstraints(), seed=100 + seed)
    d = m.sample(1000, seed)
    from ktriangle.citest import DataCI
    ci = DataCI(d)
    out = vcsgs(ci, m.dag.names)
    json.dumps(out.trace)
    for e in out.events(2):
        # removal carries a separating set the test accepts
        assert ci(*e["pair"], e["sepset"]).independent
    p = m.dag.n_vars
    for e in out.events(3):
        if e.get("event") != "triple":
            continue
        assert e["subsets_with"] == 2 ** (p - 3)
        if e["mark"] == "collider":
            assert e["independent_with"] == []
            x, y, z = e["triple"]
            pool = [v for v in range(p) if v not in (x, z, y)]
            for r in range(len(pool) + 1):
                for S in itertools.combinations(pool, r):
                    assert not ci(x, z, sorted(S + (y,))).independent


def test_ambiguous_explosion_guard():
    # star with centre 0 and 6 leaves; each leaf pair independent given {} and {0}
    def ci(x, y, S):
        return x != 0 and y != 0 and tuple(S) in ((), (0,))

    out = vcsgs(ci, 7)
    assert len(out.graph.marked(TripleMark.AMBIGUOUS)) == 15 > MAX_AMBIGUOUS
    assert not out.step5_passed
    assert any(e["event"] == "abort" for e in out.events(5))
    assert all(s is NonAdjacency.APPARENT for s in out.graph.nonadjacency.values())


def test_subset_budget():
    with pytest.raises(SubsetBudgetError):
        vcsgs(lambda x, y, S: True, 13)


def test_ci_failures_propagate():
    def ci(x, y, S):
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        vcsgs(ci, 3)


def test_queries_are_cached():
    calls = []

    def ci(x, y, S):
        calls.append((x, y, tuple(S)))
        return d_separated(Dag.from_edges(4, [(A, B), (B, C), (C, D)]), x, y, S)

    vcsgs(ci, 4)
    assert len(calls) == len(set(calls))


# ---------------------------------------------------------------- error kinds


def _mixed(n, directed=(), undirected=(), marks=None):
    return MixedGraph(tuple(f"X{i}" for i in range(n)), frozenset(directed),
                      frozenset(pair(*e) for e in undirected), marks or {})


def test_kind_i_false_adjacency():
    truth = Dag.from_edges(3, [(A, B)])
    err = classify_error(_mixed(3, undirected=[(A, B), (B, C)]), truth)
    assert err.kind is ErrorKind.KIND_I and err.witness == {"adjacency": [B, C]}


def test_true_pattern_is_no_error():
    truth = Dag.from_edges(4, [(A, C), (B, C), (C, D)])
    assert classify_error(mixed_from_pattern(pattern_of(truth), truth), truth).kind is ErrorKind.NONE


def test_missing_edges_are_not_errors():
    truth = Dag.from_edges(3, [(A, B), (B, C)])
    assert classify_error(_mixed(3, undirected=[(A, B)]), truth).kind is ErrorKind.NONE


def test_kind_ii_noncollider_on_shielded_collider():
    # truth: X -> Y <- Z with X - Z; output drops X - Z and calls <X,Y,Z> a non-collider
    X, Y, Z = range(3)
    truth = Dag.from_edges(3, [(X, Y), (Z, Y), (X, Z)])
    out = _mixed(3, undirected=[(X, Y), (Y, Z)], marks={(X, Y, Z): TripleMark.NONCOLLIDER})
    err = classify_error(out, truth)
    assert err.kind is ErrorKind.KIND_II


def test_kind_iii_false_orientation():
    truth = Dag.from_edges(3, [(A, B), (B, C)])
    out = _mixed(3, directed=[(A, B), (C, B)], marks={(A, B, C): TripleMark.COLLIDER})
    err = classify_error(out, truth)
    assert err.kind is ErrorKind.KIND_III and err.witness == {"orientation": [C, B]}


def test_kind_i_takes_precedence():
    truth = Dag.from_edges(3, [(A, B)])
    out = _mixed(3, directed=[(B, A), (C, A)], marks={(B, A, C): TripleMark.COLLIDER})
    assert classify_error(out, truth).kind is ErrorKind.KIND_I


def test_classify_error_variable_mismatch():
    with pytest.raises(ValueError):
        classify_error(_mixed(3), Dag.from_edges(4, []))


# ---------------------------------------------------------------- estimable vertices


def test_estimable_vertices_collider():
    out = _mixed(3, directed=[(A, B), (C, B)], marks={(A, B, C): TripleMark.COLLIDER})
    assert estimable_vertices(out) == {A, B, C}
    assert estimated_parents(out, B) == (A, C)
    assert estimated_parents(out, A) == ()


def test_undirected_edge_excludes_both_endpoints():
    out = _mixed(4, directed=[(A, B), (C, B)], undirected=[(C, D)], marks={(A, B, C): TripleMark.COLLIDER})
    assert estimable_vertices(out) == {A, B}


def test_fully_oriented_output_is_all_estimable():
    g = Dag.from_edges(4, [(A, C), (B, C), (C, D)])
    assert estimable_vertices(mixed_from_pattern(pattern_of(g), g)) == set(range(4))
