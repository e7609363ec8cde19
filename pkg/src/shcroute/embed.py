"""Pruning a host graph that carries an embedded semi-hypercube.

Each semi-hypercube edge is mapped to a host path with the same endpoints.
Deleting a host edge kills the semi-hypercube edges routed over it; the inner
pruner keeps the survivors well-formed and host vertices that no longer lie
on any surviving embedding path are trimmed.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .core import SemiHypercube
from .dynroute import DynDetRouter
from .prune import STRICT, SelfPruner
from .route import sample_path
from .validate import Tau, coerce_tau, strict_tau_limit

Edge = Tuple[int, int]


class EmbeddingError(ValueError):
    pass


def _norm(u, w) -> Edge:
    return (u, w) if u < w else (w, u)


@dataclass
class HostGraph:
    """Undirected simple graph on integer vertices.

    Vertices below ``H.n`` coincide with semi-hypercube vertices; larger ids
    are extra host vertices named ``x<i>`` in files.
    """

    vertices: Set[int] = field(default_factory=set)
    edges: Set[Edge] = field(default_factory=set)

    def add_edge(self, u: int, w: int) -> None:
        if u == w:
            raise EmbeddingError("self loop in host graph")
        self.vertices.update((u, w))
        self.edges.add(_norm(u, w))


def identity_embedding(H: SemiHypercube):
    host = HostGraph(set(range(H.n)))
    pi = {}
    for u, w in H.edges():
        host.add_edge(u, w)
        pi[(u, w)] = [u, w]
    return host, pi


def subdivided_embedding(H: SemiHypercube):
    """Every edge replaced by a path through a fresh middle vertex."""
    host = HostGraph(set(range(H.n)))
    pi = {}
    extra = H.n
    for u, w in H.edges():
        host.add_edge(u, extra)
        host.add_edge(extra, w)
        pi[(u, w)] = [u, extra, w]
        extra += 1
    return host, pi


def hub_embedding(H: SemiHypercube):
    """Each vertex gets a hub; edge (u, w) with u < w runs u -> hub(u) -> w.

    The edge from u to its hub is shared by every such path, so congestion
    grows with the number of larger neighbors.
    """
    host = HostGraph(set(range(H.n)))
    pi = {}
    for u, w in H.edges():
        hub = H.n + u
        host.add_edge(u, hub)
        host.add_edge(hub, w)
        pi[(u, w)] = [u, hub, w]
    return host, pi


class PruneOblivRouter:
    """Host-graph pruning with oblivious routing through the embedded semi-hypercube."""

    def __init__(self, host: HostGraph, H: SemiHypercube, pi: Dict[Edge, List[int]],
                 tau=None, mode: str = STRICT, rho: Optional[int] = None):
        self.host = host
        self.H = H
        self.tau = coerce_tau(tau) if tau is not None else Tau(strict_tau_limit(H.d), strict=True)
        self.pi: Dict[Edge, List[int]] = {}
        for (u, w), path in pi.items():
            e = _norm(u, w)
            path = list(path) if u <= w else list(reversed(path))
            if e in self.pi:
                raise EmbeddingError(f"edge {e} embedded twice")
            self.pi[e] = path
        self._check_embedding()
        self.alive: Set[int] = set(host.vertices)
        self.live_host_edges: Set[Edge] = set(host.edges)
        self.hc_edges: Set[Edge] = set(self.pi)
        self.U_v: Dict[int, Set[Edge]] = defaultdict(set)
        self.U_e: Dict[Edge, Set[Edge]] = defaultdict(set)
        for e, path in self.pi.items():
            for v in path:
                self.U_v[v].add(e)
            for a, b in zip(path, path[1:]):
                self.U_e[_norm(a, b)].add(e)
        uncovered = [v for v in host.vertices if not self.U_v.get(v)]
        if uncovered:
            raise EmbeddingError(f"host vertex {min(uncovered)} lies on no embedding path")
        self.conn: Dict[int, Edge] = {v: min(self.U_v[v]) for v in host.vertices}
        self.kappa = max((len(s) for s in self.U_e.values()), default=0)
        self.h = max((len(p) - 1 for p in self.pi.values()), default=0)
        self.pruner = SelfPruner(H, self.tau, mode=mode, rho=rho)
        self.last: dict = {}

    def _check_embedding(self) -> None:
        H, host = self.H, self.host
        expected = set(H.edges())
        if set(self.pi) != expected:
            missing = expected - set(self.pi)
            raise EmbeddingError(f"embedding does not cover edge {min(missing) if missing else '?'}")
        for v in range(H.n):
            if v not in host.vertices:
                raise EmbeddingError(f"semi-hypercube vertex {H.format(v)} missing from host")
        for (u, w), path in self.pi.items():
            if path[0] != u or path[-1] != w:
                raise EmbeddingError(f"path for {H.format(u)}-{H.format(w)} has wrong endpoints")
            for a, b in zip(path, path[1:]):
                if _norm(a, b) not in host.edges:
                    raise EmbeddingError(f"path for {H.format(u)}-{H.format(w)} uses non-edge {a}-{b}")

    @property
    def V2(self):
        """Surviving semi-hypercube vertices."""
        return self.pruner.V

    def get_rep(self, v: int) -> int:
        if v in self.pruner.V:
            return v
        return self.conn[v][0]

    def get_connection(self, v: int) -> List[int]:
        """Path from v to its representative."""
        if v in self.pruner.V:
            return [v]
        path = self.pi[self.conn[v]]
        return list(reversed(path[:path.index(v) + 1]))

    def project(self, hc_path: List[int]) -> List[int]:
        out = [hc_path[0]]
        for a, b in zip(hc_path, hc_path[1:]):
            p = self.pi[_norm(a, b)]
            if p[0] != a:
                p = list(reversed(p))
            out.extend(p[1:])
        return out

    def sample_path(self, u: int, v: int, rng) -> List[int]:
        for x in (u, v):
            if x not in self.alive:
                raise KeyError(f"host vertex {x} was pruned")
        inner = sample_path(self.H, self.pruner.V, self.tau, self.get_rep(u), self.get_rep(v), rng)
        return self.get_connection(u)[:-1] + self.project(inner) + list(reversed(self.get_connection(v)))[1:]

    def _prune(self, e_del: Edge):
        e_del = _norm(*e_del)
        if e_del not in self.live_host_edges or e_del[0] not in self.alive or e_del[1] not in self.alive:
            raise KeyError(f"host edge {e_del} is not in the remaining graph")
        self.live_host_edges.discard(e_del)
        affected = sorted({x for e in self.U_e.get(e_del, ()) for x in e})
        removed: Set[int] = set()
        for v in affected:
            # earlier deletions in this step may already have pruned v
            if v in self.pruner.V:
                removed |= self.pruner.delete(v)
                removed.add(v)
        H = self.H
        E_minus = sorted({_norm(v, w) for v in removed for w in H.neighbors(v)
                          if _norm(v, w) in self.hc_edges})
        self.hc_edges.difference_update(E_minus)
        vertex_dels: Dict[int, Set[Edge]] = defaultdict(set)
        for e in E_minus:
            path = self.pi[e]
            for a, b in zip(path, path[1:]):
                self.U_e[_norm(a, b)].discard(e)
            for x in path:
                vertex_dels[x].add(e)
        for x, es in vertex_dels.items():
            self.U_v[x] -= es
        trimmed = {x for x in vertex_dels if not self.U_v[x]}
        self.alive -= trimmed
        self.last = {"affected": affected, "removed": removed, "E_minus": E_minus,
                     "trimmed": trimmed}
        return removed, E_minus, vertex_dels, trimmed

    def _repair(self, vertex_dels, trimmed) -> None:
        for x in vertex_dels:
            if x not in trimmed and self.conn[x] not in self.U_v[x]:
                self.conn[x] = min(self.U_v[x])

    def prune_step(self, e_del: Edge) -> Set[int]:
        """Delete a host edge; return host vertices trimmed as a result."""
        _, _, vertex_dels, trimmed = self._prune(e_del)
        self._repair(vertex_dels, trimmed)
        return trimmed

    def check_invariants(self) -> None:
        """Full rescan of the coverage and incidence invariants."""
        for e in self.hc_edges:
            assert e[0] in self.pruner.V and e[1] in self.pruner.V
            path = self.pi[e]
            assert all(x in self.alive for x in path)
            assert all(_norm(a, b) in self.live_host_edges for a, b in zip(path, path[1:]))
        for x in self.alive:
            assert self.U_v[x], x
            assert self.conn[x] in self.U_v[x], x
        U_e = defaultdict(set)
        for e in self.hc_edges:
            path = self.pi[e]
            for a, b in zip(path, path[1:]):
                U_e[_norm(a, b)].add(e)
        for key in set(U_e) | set(self.U_e):
            assert U_e.get(key, set()) == self.U_e.get(key, set()), key


class PruneRouter(PruneOblivRouter):
    """Host-graph pruning that maintains an explicit routing of a demand."""

    def __init__(self, host: HostGraph, H: SemiHypercube, pi, demand: Iterable = (), L: int = 1,
                 tau=None, mode: str = STRICT, rho: Optional[int] = None):
        super().__init__(host, H, pi, tau=tau, mode=mode, rho=rho)
        self.L = L
        self.demand: Dict[int, Tuple[int, int]] = {}
        for a, b, pid in demand:
            self.demand[pid] = (a, b)
        self.inner_L = L * H.k * H.d * max(self.h, 1)
        projected = [(self.get_rep(a), self.get_rep(b), pid) for pid, (a, b) in sorted(self.demand.items())]
        self.router = DynDetRouter(H, projected, tau=self.tau, L=self.inner_L, mode=mode)
        self.pending_V: List[int] = []
        self.pending_E: List[Edge] = []
        self.pending_add: Dict[int, Tuple[int, int]] = {}
        self.pending_remove: Set[int] = set()
        self.orphaned: Set[int] = set()

    def prune_step(self, e_del: Edge) -> Set[int]:
        removed, E_minus, vertex_dels, trimmed = self._prune(e_del)
        self._repair(vertex_dels, trimmed)
        touched = set(vertex_dels) | removed
        for pid, (a, b) in sorted(self.demand.items()):
            if a not in touched and b not in touched:
                continue
            if a in trimmed or b in trimmed:
                self.orphaned.add(pid)
                self._schedule_removal(pid)
                continue
            new = (self.get_rep(a), self.get_rep(b))
            current = self.pending_add.get(pid, self.router.demand.get(pid))
            if new != current:
                self._schedule_removal(pid)
                self.pending_add[pid] = new
        self.pending_V.extend(sorted(removed))
        self.pending_E.extend(E_minus)
        return trimmed

    def _schedule_removal(self, pid: int) -> None:
        if pid in self.router.demand:
            self.pending_remove.add(pid)
        self.pending_add.pop(pid, None)

    def reroute_step(self, D_plus: Iterable = (), D_minus: Iterable = ()) -> Set[int]:
        """Flush pending prune effects and demand changes into the inner router."""
        for pid in D_minus:
            if pid not in self.demand:
                raise KeyError(f"unknown demand id {pid}")
            del self.demand[pid]
            self._schedule_removal(pid)
            self.orphaned.discard(pid)
        if self.orphaned:
            raise ValueError(f"demand {sorted(self.orphaned)[:3]} has a pruned endpoint; remove it")
        for a, b, pid in D_plus:
            if pid in self.demand:
                raise ValueError(f"demand id {pid} already present")
            if a not in self.alive or b not in self.alive:
                raise ValueError("demand endpoint was pruned")
            self.demand[pid] = (a, b)
            self.pending_add[pid] = (self.get_rep(a), self.get_rep(b))
        adds = [(a, b, pid) for pid, (a, b) in sorted(self.pending_add.items())]
        changed = self.router.dynamic_update(
            V_minus=self.pending_V, E_minus=self.pending_E,
            D_plus=adds, D_minus=sorted(self.pending_remove))
        self.pending_V, self.pending_E = [], []
        self.pending_add, self.pending_remove = {}, set()
        return changed

    def get_path(self, pid: int) -> List[int]:
        if self.pending_add or self.pending_remove or self.pending_V:
            raise RuntimeError("reroute_step must run before querying paths")
        a, b = self.demand[pid]
        inner = self.router.get_path(pid)
        return self.get_connection(a)[:-1] + self.project(inner) + list(reversed(self.get_connection(b)))[1:]


# file formats

def host_token(H: SemiHypercube, v: int) -> str:
    return H.format(v) if v < H.n else f"x{v - H.n}"


def parse_host_token(H: SemiHypercube, tok: str) -> int:
    if tok.startswith("x"):
        return H.n + int(tok[1:])
    return H.parse(tok)


def write_host(H: SemiHypercube, host: HostGraph, fh) -> None:
    fh.write("host\n")
    for u, w in sorted(host.edges):
        fh.write(f"{host_token(H, u)} {host_token(H, w)}\n")


def read_host(H: SemiHypercube, fh) -> HostGraph:
    if fh.readline().strip() != "host":
        raise EmbeddingError("expected header 'host'")
    host = HostGraph(set(range(H.n)))
    for line in fh:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 2:
            raise EmbeddingError(f"bad host line {line.strip()!r}")
        host.add_edge(parse_host_token(H, parts[0]), parse_host_token(H, parts[1]))
    return host


def write_embedding(H: SemiHypercube, pi, fh) -> None:
    fh.write(f"embed {H.k} {H.d}\n")
    for (u, w) in sorted(pi):
        path = " ".join(host_token(H, x) for x in pi[(u, w)])
        fh.write(f"{H.format(u)} {H.format(w)} : {path}\n")


def read_embedding(H: SemiHypercube, fh) -> Dict[Edge, List[int]]:
    header = fh.readline().split()
    if header != ["embed", str(H.k), str(H.d)]:
        raise EmbeddingError(f"expected header 'embed {H.k} {H.d}'")
    pi = {}
    for line in fh:
        if not line.strip() or line.startswith("#"):
            continue
        left, sep, right = line.partition(":")
        ends = left.split()
        if not sep or len(ends) != 2:
            raise EmbeddingError(f"bad embedding line {line.strip()!r}")
        u, w = H.parse(ends[0]), H.parse(ends[1])
        pi[(u, w)] = [parse_host_token(H, t) for t in right.split()]
    return pi
