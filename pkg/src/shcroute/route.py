"""Greedy paths and randomized oblivious path sampling."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .core import NotPresentError, SemiHypercube, VertexTrie
from .validate import (coerce_tau, critical_at, home_depth, is_degenerate, isolation,
                       representative)

NONCRITICAL_CAP = 64
MIDPOINT_CAP = 1024
ESCAPE_CAP_PER_K = 128


class SamplingError(RuntimeError):
    """Retry cap exhausted; the input violates the sampler's precondition."""


Path = List[int]


def greedy_path(G: SemiHypercube, V: VertexTrie, s: int, t: int) -> Optional[Path]:
    """Follow matching edges toward t one digit at a time; None if an edge is missing."""
    if s not in V:
        raise NotPresentError(G.format(s))
    if t not in V:
        raise NotPresentError(G.format(t))
    path = [s]
    depth = 0
    while s != t:
        while G.digit(s, depth) == G.digit(t, depth):
            depth += 1
        w = G.partner(s, depth, G.digit(t, depth))
        if w not in V:
            return None
        path.append(w)
        s = w
    return path


def path_is_valid(G: SemiHypercube, V: VertexTrie, path: Sequence[int],
                  removed_edges: Optional[Set[Tuple[int, int]]] = None) -> bool:
    if not path or any(v not in V for v in path):
        return False
    for u, w in zip(path, path[1:]):
        if not G.has_edge(u, w):
            return False
        if removed_edges and (min(u, w), max(u, w)) in removed_edges:
            return False
    return True


def reach_set(G: SemiHypercube, V: VertexTrie, t: int, sigma: Sequence[int] = ()) -> Set[int]:
    """All s in cluster sigma with a greedy path to t (brute force)."""
    return {s for s in V.members(sigma) if greedy_path(G, V, s, t) is not None}


def sample_midpoint(G, V, s, t, rng, cap: int, sigma: Sequence[int] = ()):
    """First uniform v in sigma with greedy paths to both s and t.

    Returns ``(v, to_s, to_t, attempts)``.
    """
    for attempt in range(1, cap + 1):
        v = V.sample(sigma, rng)
        to_s = greedy_path(G, V, v, s)
        if to_s is None:
            continue
        to_t = greedy_path(G, V, v, t)
        if to_t is None:
            continue
        return v, to_s, to_t, attempt
    raise SamplingError(f"no midpoint found in {cap} attempts")


def sample_noncritical_path_with_attempts(G, V, s, t, rng, cap: int = NONCRITICAL_CAP):
    _, to_s, to_t, attempts = sample_midpoint(G, V, s, t, rng, cap)
    return to_s[::-1] + to_t[1:], attempts


def sample_noncritical_path(G: SemiHypercube, V: VertexTrie, s: int, t: int, rng,
                            cap: int = NONCRITICAL_CAP) -> Path:
    """Valiant-style path through a random midpoint; assumes no critical clusters."""
    return sample_noncritical_path_with_attempts(G, V, s, t, rng, cap)[0]


def _escape_done(G, V, tau, s) -> bool:
    rep = representative(G, V, ())
    return home_depth(G, V, tau, s) <= len(rep)


def escape(G: SemiHypercube, V: VertexTrie, tau, s: int, rng,
           trace: Optional[List[int]] = None, cap: Optional[int] = None) -> Path:
    """Walk from s to a vertex whose home is the representative of the root.

    Each hop leaves the current home cluster along a uniformly sampled
    eligible edge landing at strictly lower isolation.  ``trace`` receives the
    isolation of the endpoint at every recursion point.
    """
    tau = coerce_tau(tau)
    if s not in V:
        raise NotPresentError(G.format(s))
    cap = cap if cap is not None else ESCAPE_CAP_PER_K * G.k
    path = [s]
    while True:
        iso_s = isolation(G, V, tau, s)
        if trace is not None:
            trace.append(iso_s)
        if _escape_done(G, V, tau, s):
            return path
        home = home_depth(G, V, tau, s)
        sigma = G.prefix(s, home)
        anc = home - 1
        while anc > 0 and is_degenerate(G, V, sigma[:anc]):
            anc -= 1
        parent = sigma[:anc]
        choices = [c for c in V.nonempty_children(parent)
                   if not critical_at(G, V, anc + 1, G.cnum(parent + (c,)), tau)]
        if not choices:
            raise SamplingError(f"no noncritical sibling to escape into from {G.format(s)}")
        for _ in range(cap):
            u = V.sample(sigma, rng)
            i = choices[int(rng.integers(len(choices)))]
            if i == G.digit(u, anc):
                continue
            v = G.partner(u, anc, i)
            if v not in V:
                continue
            back = greedy_path(G, V, u, s)
            if back is None:
                continue
            # every member of the home cluster shares the ancestors that s has
            if isolation(G, V, tau, v) < iso_s:
                path.extend(back[::-1][1:])
                path.append(v)
                s = v
                break
        else:
            raise SamplingError(f"escape from {G.format(s)} exceeded {cap} attempts")


def sample_path_with_attempts(G, V, tau, s, t, rng, cap: int = MIDPOINT_CAP,
                              traces: Optional[list] = None):
    if s not in V:
        raise NotPresentError(G.format(s))
    if t not in V:
        raise NotPresentError(G.format(t))
    trace_s: List[int] = []
    trace_t: List[int] = []
    head = escape(G, V, tau, s, rng, trace_s)
    tail = escape(G, V, tau, t, rng, trace_t)
    if traces is not None:
        traces.extend([trace_s, trace_t])
    s2, t2 = head[-1], tail[-1]
    _, to_s, to_t, attempts = sample_midpoint(G, V, s2, t2, rng, cap)
    return head + to_s[::-1][1:] + to_t[1:] + tail[::-1][1:], attempts


def sample_path(G: SemiHypercube, V: VertexTrie, tau, s: int, t: int, rng,
                cap: int = MIDPOINT_CAP) -> Path:
    """Oblivious path for a general semi-hypercube: escape both ends, then meet midway."""
    return sample_path_with_attempts(G, V, tau, s, t, rng, cap)[0]


@dataclass
class CongestionMap:
    counts: Dict[Tuple[int, int], int] = field(default_factory=dict)

    @property
    def max(self) -> int:
        return max(self.counts.values(), default=0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def mean(self) -> float:
        return self.total / len(self.counts) if self.counts else 0.0


def measure_congestion(paths: Iterable[Sequence[int]]) -> CongestionMap:
    counts: Counter = Counter()
    for p in paths:
        for u, w in zip(p, p[1:]):
            counts[(min(u, w), max(u, w))] += 1
    return CongestionMap(dict(counts))
