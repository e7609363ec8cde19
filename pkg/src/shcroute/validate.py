"""Criticality, validity and the isolation measure over a live vertex set."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from .core import Cluster, EmptyClusterError, NotPresentError, SemiHypercube, VertexTrie


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, float or string such as '1/8700'."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    return Fraction(x)


def strict_tau_limit(d: int) -> Fraction:
    return Fraction(1, 4350 * d)


@dataclass(frozen=True)
class Tau:
    value: Fraction
    strict: bool = False

    def __post_init__(self):
        v = as_fraction(self.value)
        object.__setattr__(self, "value", v)
        if not 0 < v < 1:
            raise ValueError(f"tau must lie in (0, 1), got {v}")

    @classmethod
    def for_dimension(cls, d: int) -> "Tau":
        """The strict threshold 1/(4350 d)."""
        return cls(strict_tau_limit(d), strict=True)

    def check(self, d: int) -> None:
        if self.strict and self.value > strict_tau_limit(d):
            raise ValueError(f"strict tau must be at most 1/{4350 * d}, got {self.value}")


def coerce_tau(tau) -> Tau:
    return tau if isinstance(tau, Tau) else Tau(as_fraction(tau))


@dataclass
class ValidityReport:
    valid: bool
    violations: List[Tuple[Cluster, str, dict]] = field(default_factory=list)


def critical_at(G: SemiHypercube, V: VertexTrie, depth: int, num: int, tau) -> bool:
    """Criticality of the cluster given by (depth, cluster number)."""
    t = coerce_tau(tau).value
    size = V.sizes[depth][num]
    full = G.pow[G.d - depth]
    # size < (1 - t) * full, exactly
    return 0 < size and size * t.denominator < (t.denominator - t.numerator) * full


def is_tau_critical(G: SemiHypercube, V: VertexTrie, sigma: Sequence[int], tau) -> bool:
    return critical_at(G, V, len(sigma), G.cnum(sigma), tau)


def _removed_edge_set(G: SemiHypercube, removed_edges) -> Set[Tuple[int, int]]:
    out = set()
    for u, v in removed_edges or ():
        out.add((min(u, v), max(u, v)))
    return out


def _crossing_edges(G, V, depth, num, child, removed, skip=()) -> int:
    """Edges from live child cluster ``child`` to live siblings not in ``skip``."""
    k = G.k
    span = G.pow[G.d - depth - 1]
    lo = (num * k + child - 1) * span
    alive = V.alive
    count = 0
    for v in range(lo, lo + span):
        if not alive[v]:
            continue
        for sib in range(1, k + 1):
            if sib == child or sib in skip:
                continue
            w = G.partner(v, depth, sib)
            if alive[w] and (not removed or (min(v, w), max(v, w)) not in removed):
                count += 1
    return count


def validate(G: SemiHypercube, V: VertexTrie, tau, removed_edges: Optional[Iterable] = None) -> ValidityReport:
    """Check the two structural conditions on every non-leaf cluster.

    ``removed_edges`` optionally lists deleted edges between live vertices;
    they are excluded from the degree count.
    """
    tau = coerce_tau(tau)
    removed = _removed_edge_set(G, removed_edges)
    report = ValidityReport(True)
    k = G.k
    for depth in range(G.d):
        for num in range(G.pow[depth]):
            if V.sizes[depth][num] == 0:
                continue
            crit = []
            kprime = 0
            for c in range(1, k + 1):
                child_num = num * k + c - 1
                if critical_at(G, V, depth + 1, child_num, tau):
                    crit.append(c)
                elif V.sizes[depth + 1][child_num] > 0:
                    kprime += 1
            if not crit:
                continue
            sigma = G.cluster_of_num(depth, num)
            if len(crit) > 1:
                report.violations.append((sigma, "MultipleCriticalChildren", {"children": crit}))
            for c in crit:
                size = V.sizes[depth + 1][num * k + c - 1]
                edges = _crossing_edges(G, V, depth, num, c, removed, crit)
                if 10 * edges < 9 * kprime * size:
                    report.violations.append((sigma, "LowAverageDegree", {
                        "child": c, "edges": edges, "size": size, "kprime": kprime}))
    report.valid = not report.violations
    return report


def is_noncritical_shc(G: SemiHypercube, V: VertexTrie, tau) -> bool:
    tau = coerce_tau(tau)
    for depth in range(G.d + 1):
        for num in range(G.pow[depth]):
            if critical_at(G, V, depth, num, tau):
                return False
    return True


def _critical_depths(G, V, v, tau) -> List[int]:
    if v not in V:
        raise NotPresentError(G.format(v))
    # a leaf is either full or empty, so only depths 0..d-1 matter
    return [j for j in range(G.d) if critical_at(G, V, j, v // G.pow[G.d - j], tau)]


def home_cluster(G: SemiHypercube, V: VertexTrie, tau, v: int) -> Cluster:
    depths = _critical_depths(G, V, v, tau)
    return G.prefix(v, depths[-1]) if depths else ()


def home_depth(G: SemiHypercube, V: VertexTrie, tau, v: int) -> int:
    depths = _critical_depths(G, V, v, tau)
    return depths[-1] if depths else 0


def isolation(G: SemiHypercube, V: VertexTrie, tau, v: int) -> int:
    return sum(G.d - j for j in _critical_depths(G, V, v, tau))


def crit_count(G: SemiHypercube, V: VertexTrie, tau, v: int) -> int:
    return len(_critical_depths(G, V, v, tau))


def cluster_isolation(G: SemiHypercube, V: VertexTrie, tau, sigma: Sequence[int]) -> int:
    """Minimum isolation over the live vertices of sigma."""
    sigma = tuple(sigma)
    if V.size(sigma) == 0:
        raise EmptyClusterError(f"cluster {sigma} is empty")
    tau = coerce_tau(tau)
    # contribution of sigma and its ancestors is shared by every member
    base = sum(G.d - j for j in range(len(sigma))
               if critical_at(G, V, j, G.cnum(sigma[:j]), tau))

    def below(depth: int, num: int) -> int:
        own = (G.d - depth) if depth < G.d and critical_at(G, V, depth, num, tau) else 0
        if depth == G.d:
            return 0
        best = None
        for c in range(G.k):
            child = num * G.k + c
            if V.sizes[depth + 1][child] > 0:
                val = below(depth + 1, child)
                if best is None or val < best:
                    best = val
                    if best == 0:
                        break
        return own + best

    return base + below(len(sigma), G.cnum(sigma))


def is_degenerate(G: SemiHypercube, V: VertexTrie, sigma: Sequence[int]) -> bool:
    if len(sigma) >= G.d:
        return False
    return sum(1 for s in V.child_sizes(sigma) if s > 0) == 1


def representative(G: SemiHypercube, V: VertexTrie, sigma: Sequence[int] = ()) -> Cluster:
    """Shallowest non-degenerate descendant of a nonempty cluster."""
    sigma = tuple(sigma)
    if V.size(sigma) == 0:
        raise EmptyClusterError(f"cluster {sigma} is empty")
    while len(sigma) < G.d:
        live = V.nonempty_children(sigma)
        if len(live) != 1:
            break
        sigma = sigma + (live[0],)
    return sigma
