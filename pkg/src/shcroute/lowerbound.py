"""Hard instances: valid semi-hypercubes whose hard vertex set sits behind a k-edge cut.

Two recursive shapes alternate with the remaining dimension r.  A *bad*
piece keeps a small dense child (a k-clique at the base, otherwise a block
of whole leaf-parent cliques) whose only outside edges lead into the hard set
of its sibling.  A *spread* piece puts a bad piece in child 1 and fills the
other children, matching hard vertices only to deleted positions so the cut
does not grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Set, Tuple

from .prune import ParameterError
from .core import SemiHypercube, VertexTrie, build_from_matchings
from .validate import coerce_tau, validate


@dataclass
class HardFamilySpec:
    k: int
    d: int
    d0: int
    tau: Fraction
    sizes: Dict[int, int] = field(default_factory=dict)
    cuts: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def closed_form(cls, k, d, d0, tau) -> "HardFamilySpec":
        sizes = {r: k * 2 ** ((r - d0) // 2) for r in range(d0, d + 1)}
        cuts = {r: k for r in range(d0, d + 1)}
        return cls(k, d, d0, coerce_tau(tau).value, sizes, cuts)


@dataclass
class HardInstance:
    G: SemiHypercube
    V: VertexTrie
    hard: List[int]
    cut: int
    spec: HardFamilySpec
    level_sizes: Dict[int, int]

    @property
    def removed(self) -> List[int]:
        return [v for v in range(self.G.n) if v not in self.V]


def _split_perm(chosen: List[int], m: int, first: bool) -> List[int]:
    """Permutation of range(m) sending ``chosen`` positions to 0..len-1 in order
    (``first``) or sending 0..len-1 to ``chosen`` (not ``first``); the rest
    keep their relative order."""
    chosen_set = set(chosen)
    rest_src = [p for p in range(m) if p not in chosen_set] if first else list(range(len(chosen), m))
    rest_dst = list(range(len(chosen), m)) if first else [p for p in range(m) if p not in chosen_set]
    perm = [0] * m
    if first:
        for idx, p in enumerate(chosen):
            perm[p] = idx
    else:
        for idx, p in enumerate(chosen):
            perm[idx] = p
    for s, t in zip(rest_src, rest_dst):
        perm[s] = t
    return perm


class _Builder:
    def __init__(self, k, d, d0):
        self.k, self.d, self.d0 = k, d, d0
        self.overrides = {}
        self.level_sizes: Dict[int, int] = {}

    def sigma(self, lo, depth):
        k, d = self.k, self.d
        num = lo // k ** (d - depth)
        out = []
        for _ in range(depth):
            num, r = divmod(num, k)
            out.append(r + 1)
        return tuple(reversed(out))

    def bad(self, lo, depth) -> Tuple[Set[int], List[int]]:
        k, r = self.k, self.d - depth
        m = k ** (r - 1)
        if r == self.d0:
            clique = list(range(lo, lo + k))
            alive = set(clique) | set(range(lo + m, lo + 2 * m))
            self.level_sizes.setdefault(r, len(clique))
            return alive, clique
        b_alive, b_hard = self.spread(lo + m, depth + 1)
        s = len(b_hard)
        if s > m or s % k:
            raise ParameterError(f"hard set of size {s} does not fit a child of size {m}")
        block = list(range(lo, lo + s))
        rel = [h - (lo + m) for h in b_hard]
        self.overrides[(self.sigma(lo, depth), 1, 2)] = _split_perm(rel, m, first=False)
        hard = block + b_hard
        self.level_sizes.setdefault(r, len(hard))
        return set(block) | b_alive, hard

    def spread(self, lo, depth) -> Tuple[Set[int], List[int]]:
        k, r = self.k, self.d - depth
        m = k ** (r - 1)
        alive, hard = self.bad(lo, depth + 1)
        s = len(hard)
        if s > m:
            raise ParameterError(f"hard set of size {s} exceeds child size {m}")
        rel = [h - lo for h in hard]
        perm = _split_perm(rel, m, first=True)
        sigma = self.sigma(lo, depth)
        alive = set(alive)
        for c in range(2, k + 1):
            self.overrides[(sigma, 1, c)] = perm
            start = lo + (c - 1) * m
            alive.update(range(start + s, start + m))
        self.level_sizes.setdefault(r, s)
        return alive, hard


def build_hard_instance(k: int, d: int, d0: int, tau=None) -> HardInstance:
    """Build the alternating bad/spread instance of dimension d starting at d0."""
    if k < 2:
        raise ParameterError("k must be at least 2")
    tau = coerce_tau(tau if tau is not None else Fraction(1, k))
    if not 2 <= d0 <= d:
        raise ParameterError(f"need 2 <= d0 <= d, got d0={d0}, d={d}")
    if tau.value < Fraction(1, k):
        raise ParameterError(f"tau must be at least 1/k, got {tau.value}")
    b = _Builder(k, d, d0)
    top = b.bad if (d - d0) % 2 == 0 else b.spread
    alive, hard = top(0, 0)
    G = build_from_matchings(k, d, b.overrides)
    V = VertexTrie(G, sorted(alive))
    # small d0 leaves the hard set too large next to its cluster: a critical
    # child then falls below the degree threshold or a second child goes critical
    report = validate(G, V, tau)
    if not report.valid:
        sigma, kind, _ = report.violations[0]
        raise ParameterError(f"(k={k}, d={d}, d0={d0}) gives an invalid instance: {kind} at {sigma or 'root'}")
    hard_set = set(hard)
    cut = sum(1 for h in hard for w in G.neighbors(h) if w in V and w not in hard_set)
    spec = HardFamilySpec.closed_form(k, d, d0, tau)
    return HardInstance(G, V, sorted(hard), cut, spec, dict(sorted(b.level_sizes.items())))


def live_degree(inst: HardInstance, v: int) -> int:
    return sum(1 for w in inst.G.neighbors(v) if w in inst.V)


def hard_demand(inst: HardInstance) -> List[Tuple[int, int, int]]:
    """Pairs each hard vertex with outside vertices, as many as its degree.

    Outside partners are taken round-robin among non-hard vertices, skipping
    any whose load already equals its degree.
    """
    hard = set(inst.hard)
    outside = [v for v in inst.V if v not in hard]
    cap = {v: live_degree(inst, v) for v in outside}
    load = dict.fromkeys(outside, 0)
    pairs = []
    pos = 0
    for h in inst.hard:
        for _ in range(live_degree(inst, h)):
            for _ in range(len(outside)):
                x = outside[pos % len(outside)]
                pos += 1
                if load[x] < cap[x]:
                    break
            else:
                raise ParameterError("outside vertices cannot absorb the hard demand")
            load[x] += 1
            pairs.append((h, x, len(pairs)))
    return pairs


def cut_ratio(inst: HardInstance, demand) -> Fraction:
    """Crossing demand divided by cut size: a lower bound on any routing's congestion."""
    hard = set(inst.hard)
    crossing = sum(1 for a, b, _ in demand if (a in hard) != (b in hard))
    return Fraction(crossing, inst.cut)
