import io

import pytest
from hypothesis import given, settings, strategies as st

from shcroute.core import build_random_shc, make_rng
from shcroute.dynroute import DynDetRouter
from shcroute.embed import (EmbeddingError, HostGraph, PruneOblivRouter, PruneRouter, hub_embedding,
                            identity_embedding, read_embedding, read_host, subdivided_embedding,
                            write_embedding, write_host)
from shcroute.prune import EXPERIMENTAL, SelfPruner
from shcroute.route import path_is_valid


def host_path_ok(R, path):
    return all(x in R.alive for x in path) and all(
        (min(a, b), max(a, b)) in R.live_host_edges for a, b in zip(path, path[1:]))


def build(cls, H, make, **kw):
    host, pi = make(H)
    kw.setdefault("tau", "1/4")
    kw.setdefault("mode", EXPERIMENTAL)
    kw.setdefault("rho", 1)
    return cls(host, H, pi, **kw)


def test_identity_parameters():
    H = build_random_shc(3, 2, 0)
    host, pi = identity_embedding(H)
    R = PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    assert R.kappa == 1 and R.h == 1
    for v in range(H.n):
        assert R.get_rep(v) == v
        assert R.get_connection(v) == [v]


def test_subdivided_and_hub_parameters():
    H = build_random_shc(3, 2, 1)
    R = build(PruneOblivRouter, H, subdivided_embedding)
    assert (R.kappa, R.h) == (1, 2)
    host, pi = hub_embedding(H)
    R = PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    # hub edge of u carries one path per larger neighbor
    worst = max(sum(1 for w in H.neighbors(u) if w > u) for u in range(H.n))
    assert R.kappa == worst and R.h == 2


def test_bad_embeddings_rejected():
    H = build_random_shc(2, 2, 0)
    host, pi = subdivided_embedding(H)
    host.vertices.add(10 ** 6)
    with pytest.raises(EmbeddingError):
        PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    host, pi = identity_embedding(H)
    pi.pop(min(pi))
    with pytest.raises(EmbeddingError):
        PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    host, pi = identity_embedding(H)
    e = min(pi)
    pi[e] = [e[1], e[0]]
    with pytest.raises(EmbeddingError):
        PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    with pytest.raises(EmbeddingError):
        HostGraph().add_edge(3, 3)


def test_unused_host_edge_changes_nothing():
    H = build_random_shc(3, 2, 2)
    host, pi = identity_embedding(H)
    host.add_edge(0, H.n)
    host.add_edge(H.n, 1)
    with pytest.raises(EmbeddingError):
        # the extra vertex is on no path
        PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    host, pi = subdivided_embedding(H)
    # subdivision vertices are never adjacent, so this edge carries no path
    host.add_edge(H.n, H.n + 1)
    R = PruneOblivRouter(host, H, pi, tau="1/4", mode=EXPERIMENTAL, rho=1)
    spare = next(e for e in host.edges if not R.U_e.get(e))
    assert R.prune_step(spare) == set()
    assert R.last["affected"] == [] and len(R.V2) == H.n
    R.check_invariants()
    with pytest.raises(KeyError):
        R.prune_step(spare)


def test_connection_after_pruning():
    H = build_random_shc(3, 2, 3)
    R = build(PruneOblivRouter, H, subdivided_embedding)
    rng = make_rng(3)
    for _ in range(4):
        live = sorted(e for e in R.live_host_edges if e[0] in R.alive and e[1] in R.alive)
        if not live:
            break
        R.prune_step(live[int(rng.integers(len(live)))])
        R.check_invariants()
        for x in R.alive:
            c = R.get_connection(x)
            assert c[0] == x and c[-1] == R.get_rep(x)
            assert R.get_rep(x) in R.V2
            assert host_path_ok(R, c)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(3, 2), (4, 2), (2, 3)]), st.integers(0, 10 ** 4),
       st.sampled_from(["identity", "subdivided", "hub"]))
def test_trim_and_affected_bounds(dims, seed, kind):
    k, d = dims
    H = build_random_shc(k, d, seed)
    make = {"identity": identity_embedding, "subdivided": subdivided_embedding, "hub": hub_embedding}[kind]
    R = build(PruneOblivRouter, H, make)
    rng = make_rng(seed)
    while True:
        live = sorted(e for e in R.live_host_edges if e[0] in R.alive and e[1] in R.alive)
        if not live:
            break
        trimmed = R.prune_step(live[int(rng.integers(len(live)))])
        assert len(trimmed) <= (R.h + 1) * len(R.last["E_minus"])
        assert len(R.last["affected"]) <= 2 * R.kappa
        R.check_invariants()


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(3, 2), (4, 2), (3, 3)]), st.integers(0, 10 ** 4))
def test_identity_matches_direct_pruner(dims, seed):
    k, d = dims
    H = build_random_shc(k, d, seed)
    R = build(PruneOblivRouter, H, identity_embedding, rho=2)
    P = SelfPruner(H, "1/4", mode=EXPERIMENTAL, rho=2)
    rng = make_rng(seed)
    while len(P.V):
        live = sorted(e for e in R.hc_edges)
        if not live:
            break
        u, w = live[int(rng.integers(len(live)))]
        R.prune_step((u, w))
        for v in (u, w):
            if v in P.V:
                P.delete(v)
        assert set(R.V2) == set(P.V)
        assert R.alive >= set(P.V)


def test_sample_path_deterministic_and_valid():
    H = build_random_shc(4, 2, 4)
    R = build(PruneOblivRouter, H, subdivided_embedding)
    pairs = [(0, H.n), (3, 12), (H.n + 5, H.n + 9)]
    a = [R.sample_path(u, v, make_rng(9)) for u, v in pairs]
    b = [R.sample_path(u, v, make_rng(9)) for u, v in pairs]
    assert a == b
    for (u, v), p in zip(pairs, a):
        assert p[0] == u and p[-1] == v and host_path_ok(R, p)


def add_only_pairs(H, L, count, rng):
    load = [0] * H.n
    out = []
    while len(out) < count:
        a, b = (int(x) for x in rng.integers(H.n, size=2))
        if a != b and load[a] < L and load[b] < L:
            load[a] += 1
            load[b] += 1
            out.append((a, b, len(out)))
    return out


def test_prune_router_identity_matches_inner_router():
    H = build_random_shc(4, 2, 5)
    demand = add_only_pairs(H, 1, 6, make_rng(5))
    R = build(PruneRouter, H, identity_embedding, demand=demand, L=1)
    D = DynDetRouter(H, demand, tau="1/4", L=R.inner_L, mode=EXPERIMENTAL)
    assert {p: R.get_path(p) for p in R.demand} == D.routing()
    more = [(a, b, 100 + i) for a, b, i in add_only_pairs(H, 1, 3, make_rng(6))]
    R.reroute_step(D_plus=more)
    D.dynamic_update(D_plus=more)
    assert {p: R.get_path(p) for p in R.demand} == D.routing()


def test_prune_router_tracks_deletions():
    H = build_random_shc(3, 2, 7)
    host, pi = subdivided_embedding(H)
    demand = [(0, 5, 0), (2, 7, 1), (H.n, H.n + 3, 2)]
    R = PruneRouter(host, H, pi, demand=demand, L=1, tau="1/4", mode=EXPERIMENTAL, rho=1)
    for pid in R.demand:
        a, b = R.demand[pid]
        p = R.get_path(pid)
        assert p[0] == a and p[-1] == b and host_path_ok(R, p)
    rng = make_rng(7)
    for _ in range(3):
        live = sorted(e for e in R.live_host_edges if e[0] in R.alive and e[1] in R.alive)
        R.prune_step(live[int(rng.integers(len(live)))])
        dead = sorted(R.orphaned)
        if dead:
            with pytest.raises(ValueError):
                R.reroute_step()
        R.reroute_step(D_minus=dead)
        if not len(R.V2):
            break
        with pytest.raises(KeyError):
            R.get_path(10 ** 6)
        for pid, (a, b) in R.demand.items():
            p = R.get_path(pid)
            assert p[0] == a and p[-1] == b and host_path_ok(R, p)
            inner = R.router.get_path(pid)
            assert path_is_valid(H, R.V2, inner, R.router.removed_edges)


def test_file_round_trip():
    H = build_random_shc(3, 2, 8)
    host, pi = subdivided_embedding(H)
    a, b = io.StringIO(), io.StringIO()
    write_host(H, host, a)
    write_embedding(H, pi, b)
    a.seek(0)
    b.seek(0)
    host2 = read_host(H, a)
    pi2 = read_embedding(H, b)
    assert host2 == host
    assert {e: p for e, p in pi2.items()} == pi
    with pytest.raises(EmbeddingError):
        read_host(H, io.StringIO("nope\n"))
    with pytest.raises(EmbeddingError):
        read_embedding(H, io.StringIO("embed 9 9\n"))
