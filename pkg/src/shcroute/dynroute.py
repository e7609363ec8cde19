"""Deterministic dynamic routing of an explicit demand on a semi-hypercube.

Every cluster splits the demand crossing each pair of child clusters into a
base part, routed over one direct matching edge, and an overflow part, which
first leaves both endpoint children over load-balanced edges and then takes a
direct edge.  Sub-demands connecting endpoints to chosen edges recurse into
the children with identifiers extended by one bit.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .balance import LoadBalancer
from .core import NotPresentError, SemiHypercube, VertexTrie
from .validate import coerce_tau, validate

log = logging.getLogger(__name__)

STRICT = "strict"
EXPERIMENTAL = "experimental"

Edge = Tuple[int, int]


class RouterError(RuntimeError):
    """Caller contract broken or an internal bound failed in strict mode."""


def child_id(rid, bit: int):
    """Identifier of a sub-demand: ``bit`` 0 for direct legs, 1 for overflow legs."""
    return (rid[0], rid[1] + (bit,))


def parent_id(rid):
    return (rid[0], rid[1][:-1])


def root_id(base):
    return (base, ())


def _norm(u: int, w: int) -> Edge:
    return (u, w) if u < w else (w, u)


@dataclass
class ClusterRouting:
    pairs: Dict = field(default_factory=dict)        # rid -> (a, b)
    base: Dict = field(default_factory=lambda: defaultdict(set))
    ovf: Dict = field(default_factory=lambda: defaultdict(set))
    in_ovf: Set = field(default_factory=set)
    ovf_lb: Dict = field(default_factory=dict)       # child -> LoadBalancer over (u in child, w)
    dir_lb: Dict = field(default_factory=dict)       # (i, j) -> LoadBalancer over (u in i, w in j)
    dir_pairs: Dict = field(default_factory=dict)    # rid -> (a, b) of the direct part


@dataclass
class LevelCheck:
    depth: int
    lhs: int
    rhs: int

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


class DynDetRouter:
    def __init__(self, G: SemiHypercube, demand: Iterable = (), tau="1/4", L: int = 1,
                 V: Optional[VertexTrie] = None, removed_edges: Iterable[Edge] = (),
                 mode: str = STRICT):
        if mode not in (STRICT, EXPERIMENTAL):
            raise ValueError(f"unknown mode {mode!r}")
        self.G = G
        self.k, self.d = G.k, G.d
        self.tau = coerce_tau(tau)
        self.L = L
        self.mode = mode
        if mode == STRICT and self.tau.value > coerce_tau("1/4").value:
            raise RouterError("tau must be at most 1/4")
        self.V = V.copy() if V is not None else VertexTrie(G)
        self.removed_edges: Set[Edge] = {_norm(u, w) for u, w in removed_edges}
        self.demand: Dict[int, Tuple[int, int]] = {}
        self.level_checks: List[LevelCheck] = []
        self.clusters: Dict[Tuple[int, int], ClusterRouting] = {}
        k = self.k
        for depth in range(self.d):
            for num in range(G.pow[depth]):
                cl = ClusterRouting()
                for i in range(1, k + 1):
                    cl.ovf_lb[i] = LoadBalancer()
                    for j in range(i + 1, k + 1):
                        cl.dir_lb[(i, j)] = LoadBalancer()
                self.clusters[(depth, num)] = cl
        # start with every live edge as a bucket, then route D as one addition
        per_lb = defaultdict(set)
        for u, w in self.live_edges():
            depth = G.lcp_depth(u, w)
            num = u // G.pow[self.d - depth]
            for key, bucket in self._buckets_of(depth, u, w):
                per_lb[(depth, num) + key].add(bucket)
        for key, buckets in per_lb.items():
            cl = self.clusters[key[:2]]
            lb = cl.ovf_lb[key[3]] if key[2] == "ovf" else cl.dir_lb[key[3]]
            lb.update(add_buckets=buckets)
        pairs = self._parse_pairs(demand)
        self._check_contract(self.V, self.removed_edges, {**pairs})
        self.demand = {}
        if pairs:
            self._rec_update(0, 0, {}, {}, {root_id(b): ab for b, ab in pairs.items()}, {})
        self.demand = dict(pairs)

    # helpers

    def _buckets_of(self, depth, u, w):
        """Balancer keys and bucket ids for a cluster-level edge."""
        G = self.G
        iu, iw = G.digit(u, depth), G.digit(w, depth)
        if iu > iw:
            u, w, iu, iw = w, u, iw, iu
        return [(("ovf", iu), (u, w)), (("ovf", iw), (w, u)), (("dir", (iu, iw)), (u, w))]

    def live_edges(self):
        for u, w in self.G.edges():
            if u in self.V and w in self.V and (u, w) not in self.removed_edges:
                yield (u, w)

    def has_live_edge(self, u: int, w: int) -> bool:
        return (u in self.V and w in self.V and self.G.has_edge(u, w)
                and _norm(u, w) not in self.removed_edges)

    def _parse_pairs(self, demand) -> Dict[int, Tuple[int, int]]:
        out = {}
        for a, b, pid in demand:
            if pid in out:
                raise RouterError(f"duplicate demand id {pid}")
            out[pid] = (a, b)
        return out

    def level_load(self, depth: int) -> int:
        return max(self.k, self.L) * 20 ** depth

    def congestion_bound(self) -> int:
        return max(self.k, self.L) * 20 ** self.d

    def length_bound(self) -> int:
        return 4 ** self.d

    def loads(self, pairs: Dict) -> Counter:
        c: Counter = Counter()
        for a, b in pairs.values():
            c[a] += 1
            c[b] += 1
        return c

    def _check_contract(self, V, removed, pairs) -> None:
        if self.mode != STRICT:
            return
        for a, b in pairs.values():
            if a not in V or b not in V:
                raise RouterError("demand endpoint not in the vertex set")
        over = [v for v, c in self.loads(pairs).items() if c > self.L]
        if over:
            raise RouterError(f"demand load exceeds L={self.L} at {self.G.format(over[0])}")
        report = validate(self.G, V, self.tau, removed)
        if not report.valid:
            raise RouterError(f"graph is not a valid semi-hypercube: {report.violations[:3]}")

    def overflow_threshold(self, depth: int, edges: int) -> int:
        """max(0, 4 L_depth (|E| - k^(d-depth-1)/4)), kept in integers."""
        lvl = self.level_load(depth)
        return max(0, 4 * lvl * edges - lvl * self.G.pow[self.d - depth - 1])

    # path queries

    def get_path(self, pid: int) -> List[int]:
        if pid not in self.demand:
            raise KeyError(f"unknown demand id {pid}")
        a, b = self.demand[pid]
        return self._get_path(0, 0, a, b, root_id(pid))

    def _get_path(self, depth, num, a, b, rid) -> List[int]:
        if depth == self.d:
            if a != b:
                raise RouterError("leaf sub-demand with distinct endpoints")
            return [a]
        G, k = self.G, self.k
        cl = self.clusters[(depth, num)]
        tail: List[int] = []
        head: List[int] = []
        if rid in cl.in_ovf:
            i, j = G.digit(a, depth), G.digit(b, depth)
            a1, c1 = cl.ovf_lb[i].assign[rid]
            b1, d1 = cl.ovf_lb[j].assign[rid]
            tail = self._get_path(depth + 1, num * k + i - 1, a, a1, child_id(rid, 1)) + [c1]
            head = [d1] + self._get_path(depth + 1, num * k + j - 1, b1, b, child_id(rid, 1))
            a, b = c1, d1
        i, j = G.digit(a, depth), G.digit(b, depth)
        if i == j:
            mid = self._get_path(depth + 1, num * k + i - 1, a, b, child_id(rid, 0))
        else:
            u, w = cl.dir_lb[(min(i, j), max(i, j))].assign[rid]
            a1, b1 = (u, w) if i < j else (w, u)
            mid = (self._get_path(depth + 1, num * k + i - 1, a, a1, child_id(rid, 0))
                   + self._get_path(depth + 1, num * k + j - 1, b1, b, child_id(rid, 0)))
        return _join(_join(tail, mid), head)

    def routing(self) -> Dict[int, List[int]]:
        return {pid: self.get_path(pid) for pid in sorted(self.demand)}

    # updates

    def deletion_update(self, v: int) -> dict:
        """Arguments for dynamic_update that delete v with its edges and demand."""
        if v not in self.V:
            raise NotPresentError(self.G.format(v))
        edges = [_norm(v, w) for w in self.G.neighbors(v) if self.has_live_edge(v, w)]
        pairs = [pid for pid, (a, b) in self.demand.items() if v in (a, b)]
        return {"V_minus": [v], "E_minus": edges, "D_minus": pairs}

    def addition_update(self, v: int) -> dict:
        """Arguments for dynamic_update that restore v with its edges to live neighbors."""
        if v in self.V:
            raise ValueError(f"{self.G.format(v)} already present")
        edges = [_norm(v, w) for w in self.G.neighbors(v) if w in self.V]
        return {"V_plus": [v], "E_plus": edges}

    def dynamic_update(self, V_plus=(), V_minus=(), E_plus=(), E_minus=(), D_plus=(), D_minus=()) -> Set[int]:
        """Apply graph and demand changes; return ids whose path changed."""
        G = self.G
        V_plus, V_minus = list(V_plus), list(V_minus)
        E_plus = sorted({_norm(u, w) for u, w in E_plus})
        E_minus = sorted({_norm(u, w) for u, w in E_minus})
        added = self._parse_pairs(D_plus)
        removed_ids = []
        for item in D_minus:
            if isinstance(item, tuple):
                a, b, pid = item
                if self.demand.get(pid) != (a, b):
                    raise RouterError(f"demand {pid} endpoints do not match")
            else:
                pid = item
            if pid not in self.demand:
                raise KeyError(f"unknown demand id {pid}")
            removed_ids.append(pid)
        # build the post-update graph and check the caller contract before mutating
        V2 = self.V.copy()
        for v in V_minus:
            V2.remove(v)
        for v in V_plus:
            V2.add(v)
        removed2 = set(self.removed_edges)
        for u, w in E_minus:
            if not self.has_live_edge(u, w):
                raise RouterError(f"edge {G.format(u)}-{G.format(w)} is not live")
            removed2.add((u, w))
        for u, w in E_plus:
            if not G.has_edge(u, w) or u not in V2 or w not in V2:
                raise RouterError(f"cannot add edge {G.format(u)}-{G.format(w)}")
            if (u in self.V and w in self.V and (u, w) not in self.removed_edges):
                raise RouterError(f"edge {G.format(u)}-{G.format(w)} already live")
            removed2.discard((u, w))
        for v in V_minus:
            for w in G.neighbors(v):
                if self.has_live_edge(v, w) and _norm(v, w) not in set(E_minus):
                    raise RouterError("deleted vertex still has live edges; list them in E_minus")
        pairs2 = {p: ab for p, ab in self.demand.items() if p not in set(removed_ids)}
        for pid in added:
            if pid in pairs2:
                raise RouterError(f"demand id {pid} already present")
        pairs2.update(added)
        for a, b in pairs2.values():
            if a not in V2 or b not in V2:
                raise RouterError("demand endpoint not in the post-update vertex set")
        self._check_contract(V2, removed2, pairs2)
        # edges of deleted vertices stay marked removed so re-adding needs E_plus
        keep_removed = {e for e in removed2 if e[0] in V2 and e[1] in V2}
        minus = {root_id(p): self.demand[p] for p in removed_ids}
        changed = self._rec_update(0, 0, self._group_edges(E_plus), self._group_edges(E_minus), {}, minus)
        self.V, self.removed_edges = V2, keep_removed
        for p in removed_ids:
            del self.demand[p]
        self.demand.update(added)
        plus = {root_id(p): ab for p, ab in added.items()}
        changed |= self._rec_update(0, 0, {}, {}, plus, {})
        return {rid[0] for rid in changed} | set(added)

    def _group_edges(self, edges) -> Dict[Tuple[int, int], List[Edge]]:
        G = self.G
        out = defaultdict(list)
        for u, w in edges:
            depth = G.lcp_depth(u, w)
            out[(depth, u // G.pow[self.d - depth])].append((u, w))
        return out

    def _subtree_has_edges(self, grouped, depth, num) -> bool:
        G = self.G
        for (dep, nm) in grouped:
            if dep >= depth and nm // G.pow[dep - depth] == num:
                return True
        return False

    def _rec_update(self, depth, num, Eplus, Eminus, Dplus: Dict, Dminus: Dict) -> Set:
        G, k = self.G, self.k
        cl = self.clusters[(depth, num)]
        digit = lambda v: G.digit(v, depth)  # noqa: E731
        lvl_plus = Eplus.get((depth, num), [])
        lvl_minus = Eminus.get((depth, num), [])

        def pair_key(a, b):
            i, j = digit(a), digit(b)
            return (min(i, j), max(i, j))

        for rid, ab in Dminus.items():
            if cl.pairs.get(rid) != ab:
                raise RouterError(f"sub-demand {rid} endpoints do not match stored state")
        for rid in Dplus:
            if rid in cl.pairs and rid not in Dminus:
                raise RouterError(f"sub-demand {rid} already present")

        # step 1: base/overflow split per child pair
        cross_plus = defaultdict(set)
        cross_minus = defaultdict(set)
        dir_plus: Dict = {}
        dir_minus: Dict = {}
        for rid, (a, b) in Dminus.items():
            key = pair_key(a, b)
            if key[0] == key[1]:
                dir_minus[rid] = (a, b)
            else:
                cross_minus[key].add(rid)
            del cl.pairs[rid]
        for rid, (a, b) in Dplus.items():
            key = pair_key(a, b)
            if key[0] == key[1]:
                dir_plus[rid] = (a, b)
            else:
                cross_plus[key].add(rid)
            cl.pairs[rid] = (a, b)
        old_pairs = {**Dminus}
        edge_delta = Counter()
        for u, w in lvl_plus:
            edge_delta[pair_key(u, w)] += 1
        for u, w in lvl_minus:
            edge_delta[pair_key(u, w)] -= 1
        ovf_plus: Set = set()
        ovf_minus: Set = set()
        for i in range(1, k + 1):
            for j in range(i + 1, k + 1):
                key = (i, j)
                base, ovf = cl.base[key], cl.ovf[key]
                o_minus = ovf & cross_minus[key]
                b_minus = base & cross_minus[key]
                ovf -= o_minus
                base -= b_minus
                edges = len(cl.dir_lb[key].clients_of) + edge_delta[key]
                T = self.overflow_threshold(depth, edges)
                incoming = cross_plus[key]
                rf = min(T - len(base), len(ovf) + len(incoming))
                if rf >= 0:
                    b_plus = set(sorted(ovf | incoming)[:rf])
                    o_minus |= ovf & b_plus
                    o_plus = incoming - b_plus
                else:
                    b_plus = set()
                    o_plus = set(sorted(base)[:-rf])
                    b_minus |= o_plus
                    o_plus |= incoming
                ovf -= o_minus
                base -= b_minus
                base |= b_plus
                ovf |= o_plus
                for rid in b_minus:
                    dir_minus[rid] = old_pairs.get(rid, cl.pairs.get(rid))
                for rid in b_plus:
                    dir_plus[rid] = cl.pairs[rid]
                ovf_plus |= o_plus
                ovf_minus |= o_minus
        for rid in ovf_minus:
            old_pairs.setdefault(rid, cl.pairs.get(rid))
        cl.in_ovf -= ovf_minus
        cl.in_ovf |= ovf_plus

        # step 2: overflow leaves both endpoint children over balanced edges
        child_plus = defaultdict(dict)
        child_minus = defaultdict(dict)
        I_plus: Set = set()
        I_minus: Set = set()
        rem = {}
        edge_buckets_plus = defaultdict(list)
        edge_buckets_minus = defaultdict(list)
        for u, w in lvl_plus:
            for key, bucket in self._buckets_of(depth, u, w):
                edge_buckets_plus[key].append(bucket)
        for u, w in lvl_minus:
            for key, bucket in self._buckets_of(depth, u, w):
                edge_buckets_minus[key].append(bucket)
        for i in range(1, k + 1):
            adds = {rid for rid in ovf_plus if i in (digit(cl.pairs[rid][0]), digit(cl.pairs[rid][1]))}
            drops = {rid for rid in ovf_minus if i in (digit(old_pairs[rid][0]), digit(old_pairs[rid][1]))}
            bp = edge_buckets_plus[("ovf", i)]
            bm = edge_buckets_minus[("ovf", i)]
            if not (adds or drops or bp or bm):
                continue
            got, lost, prev = cl.ovf_lb[i].update(adds, drops, bp, bm)
            I_plus |= got
            I_minus |= lost
            rem[i] = prev
        for rid in sorted(I_minus):
            a, b = old_pairs.get(rid) or cl.pairs[rid]
            i, j = digit(a), digit(b)
            a1, c1 = rem.get(i, {}).get(rid) or cl.ovf_lb[i].assign[rid]
            b1, d1 = rem.get(j, {}).get(rid) or cl.ovf_lb[j].assign[rid]
            child_minus[i][child_id(rid, 1)] = (a, a1)
            child_minus[j][child_id(rid, 1)] = (b1, b)
            dir_minus[rid] = (c1, d1)
        for rid in sorted(I_plus):
            a, b = cl.pairs[rid]
            i, j = digit(a), digit(b)
            a1, c1 = cl.ovf_lb[i].assign[rid]
            b1, d1 = cl.ovf_lb[j].assign[rid]
            child_plus[i][child_id(rid, 1)] = (a, a1)
            child_plus[j][child_id(rid, 1)] = (b1, b)
            dir_plus[rid] = (c1, d1)

        # step 3: direct demand over balanced matching edges
        old_dir = {}
        for rid, ab in dir_minus.items():
            old_dir[rid] = ab
            cl.dir_pairs.pop(rid, None)
        cl.dir_pairs.update(dir_plus)
        changed: Set = set(dir_plus) | set(dir_minus)
        by_key_plus = defaultdict(set)
        by_key_minus = defaultdict(set)
        for rid, (a, b) in dir_plus.items():
            by_key_plus[pair_key(a, b)].add(rid)
        for rid, (a, b) in dir_minus.items():
            by_key_minus[pair_key(a, b)].add(rid)
        for i in range(1, k + 1):
            for rid in by_key_minus[(i, i)]:
                a, b = old_dir[rid]
                child_minus[i][child_id(rid, 0)] = (a, b)
            for rid in by_key_plus[(i, i)]:
                a, b = dir_plus[rid]
                child_plus[i][child_id(rid, 0)] = (a, b)
            for j in range(i + 1, k + 1):
                key = (i, j)
                adds, drops = by_key_plus[key], by_key_minus[key]
                bp = edge_buckets_plus[("dir", key)]
                bm = edge_buckets_minus[("dir", key)]
                if not (adds or drops or bp or bm):
                    continue
                lb = cl.dir_lb[key]
                got, lost, prev = lb.update(adds, drops, bp, bm)
                changed |= got | lost
                for rid in sorted(lost):
                    ab = old_dir.get(rid)
                    if ab is None or pair_key(*ab) != key:
                        ab = cl.dir_pairs[rid]
                    a, b = ab
                    u, w = prev[rid]
                    a1, b1 = (u, w) if digit(a) == i else (w, u)
                    child_minus[digit(a)][child_id(rid, 0)] = (a, a1)
                    child_minus[digit(b)][child_id(rid, 0)] = (b1, b)
                for rid in sorted(got):
                    a, b = cl.dir_pairs[rid]
                    u, w = lb.assign[rid]
                    a1, b1 = (u, w) if digit(a) == i else (w, u)
                    child_plus[digit(a)][child_id(rid, 0)] = (a, a1)
                    child_plus[digit(b)][child_id(rid, 0)] = (b1, b)

        lhs = sum(len(child_plus[i]) + len(child_minus[i]) for i in range(1, k + 1))
        rhs = (72 * (len(Dplus) + len(Dminus))
               + 320 * self.level_load(depth) * (len(lvl_plus) + len(lvl_minus)))
        check = LevelCheck(depth, lhs, rhs)
        self.level_checks.append(check)
        if not check.ok:
            msg = f"recourse bound failed at depth {depth}: {lhs} > {rhs}"
            if self.mode == STRICT:
                raise RouterError(msg)
            log.warning(msg)

        if depth + 1 < self.d:
            for i in range(1, k + 1):
                cnum = num * k + i - 1
                if child_plus[i] or child_minus[i] or self._subtree_has_edges(Eplus, depth + 1, cnum) \
                        or self._subtree_has_edges(Eminus, depth + 1, cnum):
                    sub = self._rec_update(depth + 1, cnum, Eplus, Eminus, child_plus[i], child_minus[i])
                    changed |= {parent_id(r) for r in sub}
        return changed

    # invariant checks used by tests and the harness

    def check_thresholds(self) -> None:
        for (depth, num), cl in self.clusters.items():
            for key, lb in cl.dir_lb.items():
                T = self.overflow_threshold(depth, len(lb.clients_of))
                base, ovf = cl.base.get(key, set()), cl.ovf.get(key, set())
                assert len(base) <= T, (depth, num, key)
                if ovf:
                    assert len(base) == T, (depth, num, key)

    def check_balancers(self) -> None:
        for cl in self.clusters.values():
            for lb in cl.ovf_lb.values():
                lb.check()
            for lb in cl.dir_lb.values():
                lb.check()


def _join(p: List[int], q: List[int]) -> List[int]:
    """Concatenate vertex sequences that share the junction vertex."""
    if not p:
        return list(q)
    if not q:
        return list(p)
    if p[-1] != q[0]:
        return p + q
    return p + q[1:]
