from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import brute
from shcroute.core import VertexTrie, build_hypercube_style, build_random_shc, make_rng
from shcroute.validate import (Tau, cluster_isolation, coerce_tau, crit_count, home_cluster,
                               is_degenerate, is_noncritical_shc, is_tau_critical, isolation,
                               representative, strict_tau_limit, validate)


def trie_without(G, labels):
    V = VertexTrie(G)
    for lab in labels:
        V.remove(G.parse(lab))
    return V


def kinds(report):
    return {(sigma, kind) for sigma, kind, _ in report.violations}


def test_tau_parsing_and_strict_limit():
    assert coerce_tau("1/8").value == Fraction(1, 8)
    assert coerce_tau(0.25).value == Fraction(1, 4)
    assert strict_tau_limit(2) == Fraction(1, 8700)
    with pytest.raises(ValueError):
        Tau(0)
    with pytest.raises(ValueError):
        Tau(Fraction(1, 100), strict=True).check(1)
    Tau.for_dimension(3).check(3)


def test_criticality_examples():
    G = build_random_shc(3, 2, 0)
    V = VertexTrie(G)
    assert not is_tau_critical(G, V, (1,), "0.01")
    V.remove(G.parse("1.1"))
    assert is_tau_critical(G, V, (1,), "0.01")
    for lab in ("1.2", "1.3"):
        V.remove(G.parse(lab))
    assert not is_tau_critical(G, V, (1,), "0.01")


@pytest.mark.parametrize("k,d", [(2, 1), (3, 2), (4, 2), (2, 4)])
def test_fresh_graph_valid(k, d):
    G = build_random_shc(k, d, k * d)
    for tau in ("1/2", "1/100", strict_tau_limit(d)):
        assert validate(G, VertexTrie(G), tau).valid


def test_figure_two_configuration():
    G = build_hypercube_style(3, 3)
    survivors = ["1.1.1", "1.1.2"]
    gone = [f"1.{a}.{b}" for a in (1, 2, 3) for b in (1, 2, 3) if f"1.{a}.{b}" not in survivors]
    gone += ["2.1.1", "2.1.2", "3.1.1", "3.1.2"]
    V = trie_without(G, gone)
    rep = validate(G, V, "1/4")
    assert kinds(rep) == {((), "LowAverageDegree")}
    assert kinds(rep) == brute.violations(G, set(V), Fraction(1, 4))
    info = rep.violations[0][2]
    assert info["edges"] == 0 and info["size"] == 2 and info["kprime"] == 2


def test_two_critical_children():
    G = build_random_shc(3, 2, 4)
    V = trie_without(G, ["1.2", "2.3"])
    assert ((), "MultipleCriticalChildren") in kinds(validate(G, V, "0.01"))


def test_removed_edges_reduce_degree():
    G = build_hypercube_style(3, 2)
    V = trie_without(G, ["1.1"])
    assert validate(G, V, "1/9").valid
    cut = [(G.parse("1.2"), G.parse("2.2")), (G.parse("1.2"), G.parse("3.2"))]
    rep = validate(G, V, "1/9", removed_edges=cut)
    assert kinds(rep) == {((), "LowAverageDegree")}
    assert kinds(rep) == brute.violations(G, set(V), Fraction(1, 9), cut)


alive_sets = st.tuples(st.sampled_from([(2, 2), (3, 2), (2, 3), (4, 2)]),
                       st.integers(0, 1000), st.lists(st.integers(0, 10 ** 6), max_size=12),
                       st.sampled_from(["1/2", "1/4", "1/9", "1/100"]))


@settings(max_examples=60, deadline=None)
@given(alive_sets)
def test_validate_matches_brute_force(case):
    (k, d), seed, dels, tau = case
    G = build_random_shc(k, d, seed)
    V = VertexTrie(G)
    for x in dels:
        if len(V):
            v = sorted(V)[x % len(V)]
            V.remove(v)
    rep = validate(G, V, tau)
    assert kinds(rep) == brute.violations(G, set(V), Fraction(tau))
    assert rep.valid == (not rep.violations)


def test_noncritical_examples():
    G = build_random_shc(3, 2, 1)
    assert is_noncritical_shc(G, VertexTrie(G), "1/100")
    V = trie_without(G, ["2.2"])
    assert not is_noncritical_shc(G, V, Fraction(1, 10))
    V = trie_without(G, ["2.1", "2.2", "2.3"])
    # only the root lost vertices and it keeps two thirds
    assert is_noncritical_shc(G, V, "1/3")


def test_home_and_isolation_fresh():
    G = build_random_shc(3, 3, 2)
    V = VertexTrie(G)
    for v in range(G.n):
        assert home_cluster(G, V, "1/10", v) == ()
        assert isolation(G, V, "1/10", v) == 0


def test_home_and_isolation_after_one_removal():
    G = build_random_shc(3, 2, 5)
    V = trie_without(G, ["1.1"])
    assert home_cluster(G, V, "0.01", G.parse("1.2")) == (1,)
    assert home_cluster(G, V, "0.01", G.parse("2.1")) == ()
    # the root keeps 8/9 < 0.99 of its vertices, so it also counts
    assert isolation(G, V, "0.01", G.parse("1.2")) == 2 + 1
    assert isolation(G, V, "0.01", G.parse("1.2")) == brute.isolation(G, set(V), Fraction(1, 100), G.parse("1.2"))
    # with tau = 1/9 the root is not critical and only cluster 1 contributes
    assert isolation(G, V, "1/9", G.parse("1.2")) == 1
    assert isolation(G, V, "1/9", G.parse("2.1")) == 0
    assert crit_count(G, V, "1/9", G.parse("1.3")) == 1


def test_nested_critical_ancestors():
    G = build_random_shc(3, 3, 6)
    V = trie_without(G, ["1.1.1"])
    v = G.parse("1.1.2")
    assert isolation(G, V, "1/20", v) == (3 - 1) + (3 - 2)
    assert cluster_isolation(G, V, "1/20", (1,)) == 2
    assert cluster_isolation(G, V, "1/20", (1, 1)) == 3
    assert cluster_isolation(G, V, "1/20", ()) == 0


@settings(max_examples=40, deadline=None)
@given(alive_sets)
def test_isolation_matches_definition(case):
    (k, d), seed, dels, tau = case
    G = build_random_shc(k, d, seed)
    V = VertexTrie(G)
    for x in dels:
        if len(V) > 1:
            V.remove(sorted(V)[x % len(V)])
    alive = set(V)
    t = Fraction(tau)
    for v in alive:
        assert isolation(G, V, tau, v) == brute.isolation(G, alive, t, v)
        depths = brute.critical_depths(G, alive, t, v)
        expect = brute.to_label(v, k, d)[:depths[-1]] if depths else ()
        assert home_cluster(G, V, tau, v) == expect
    for depth in range(d + 1):
        for sigma in brute.labels(k, depth):
            inside = brute.members(alive, sigma, k, d)
            if inside:
                assert cluster_isolation(G, V, tau, sigma) == min(brute.isolation(G, alive, t, v) for v in inside)


def test_representative_examples():
    G = build_random_shc(3, 2, 0)
    V = VertexTrie(G)
    assert representative(G, V, ()) == ()
    assert representative(G, V, (2, 3)) == (2, 3)
    for lab in ("1.1", "1.2", "1.3", "3.1", "3.2", "3.3"):
        V.remove(G.parse(lab))
    assert is_degenerate(G, V, ())
    assert representative(G, V, ()) == (2,)
    V.remove(G.parse("2.1"))
    V.remove(G.parse("2.2"))
    assert representative(G, V, ()) == (2, 3)


def test_random_deletions_keep_report_shape():
    G = build_random_shc(4, 2, 9)
    V = VertexTrie(G)
    rng = make_rng(3)
    while len(V) > 3:
        V.remove(V.sample((), rng))
        rep = validate(G, V, "1/4")
        for sigma, kind, info in rep.violations:
            assert kind in ("MultipleCriticalChildren", "LowAverageDegree")
            assert isinstance(info, dict)
