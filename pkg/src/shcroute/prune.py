"""Self-pruning of a semi-hypercube under adversarial vertex deletions.

``SelfPruner`` is the worst-case pruner with shadow mark sets,
``ReferencePruner`` is the simpler mark-set version kept as a cross-check and
``BatchedPruner`` is the amortized batch variant.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .core import NotPresentError, SemiHypercube, VertexTrie
from .validate import Tau, coerce_tau, critical_at

STRICT = "strict"
EXPERIMENTAL = "experimental"


class ParameterError(ValueError):
    pass


class BatchBudgetError(RuntimeError):
    pass


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


def strict_rho(k: int, d: int, tau) -> int:
    tau = coerce_tau(tau).value
    return math.ceil(2 * harmonic(k) * (2 * d + 1) / tau)


def reference_rho(k: int, d: int, tau) -> int:
    tau = coerce_tau(tau).value
    return math.ceil(3 * d * harmonic(k) / tau)


def _check_mode(mode: str) -> None:
    if mode not in (STRICT, EXPERIMENTAL):
        raise ValueError(f"unknown mode {mode!r}")


def cluster_degree(G: SemiHypercube, V: VertexTrie, v: int, depth: int) -> int:
    """Number of live matching partners of v among the children of its depth ancestor."""
    return sum(1 for w in G.cluster_neighbors(v, depth) if w in V)


class SelfPruner:
    """Worst-case pruner keeping every shadow threshold set materialized.

    Clusters are addressed internally as (depth, cluster number).  Shadow
    set ``(depth, num, anc_depth, j)`` holds the live vertices of the cluster
    whose degree toward the siblings at ``anc_depth`` is below j, for
    1 <= j <= k-1.
    """

    def __init__(self, G: SemiHypercube, tau, mode: str = STRICT, rho: Optional[int] = None):
        _check_mode(mode)
        self.G = G
        self.k, self.d = G.k, G.d
        self.tau = coerce_tau(tau)
        self.mode = mode
        if mode == STRICT:
            if self.k < 16 * self.d:
                raise ParameterError(f"strict mode needs k >= 16d, got k={self.k}, d={self.d}")
            Tau(self.tau.value, strict=True).check(self.d)
            if rho is not None and rho != strict_rho(self.k, self.d, self.tau):
                raise ParameterError("strict mode does not accept a custom rho")
        self.rcycle = 2 * self.d + 1
        self.H_k = harmonic(self.k)
        self.rho = rho if rho is not None else strict_rho(self.k, self.d, self.tau)
        if self.rho < 1:
            raise ParameterError("rho must be positive")
        self.V = VertexTrie(G)
        k = self.k
        self.target = [[1] * G.pow[j] for j in range(self.d)]
        rest = frozenset(range(2, k + 1))
        self.untargeted: List[List[Set[int]]] = [[set(rest) for _ in range(G.pow[j])] for j in range(self.d)]
        self.shadow: Dict[Tuple[int, int, int, int], Set[int]] = defaultdict(set)
        self._keys: Dict[int, List[Tuple[int, int, int, int]]] = defaultdict(list)
        self.minfo: Dict[Tuple[int, int], Tuple[int, int]] = {}

    # inspection helpers

    def size(self, depth: int, num: int) -> int:
        return self.V.sizes[depth][num]

    def shadow_set(self, depth: int, num: int, anc_depth: int, j: int) -> Set[int]:
        return self.shadow.get((depth, num, anc_depth, j), set())

    def mark_set(self, depth: int, num: int) -> Set[int]:
        info = self.minfo.get((depth, num))
        if info is None:
            return set()
        return self.shadow_set(depth, num, info[0], info[1])

    def max_mark_ratio(self) -> Fraction:
        best = Fraction(0)
        for (depth, num), info in self.minfo.items():
            size = self.V.sizes[depth][num]
            if size:
                r = Fraction(len(self.shadow_set(depth, num, *info)), size)
                if r > best:
                    best = r
        return best

    # core steps

    def process_removal(self, x: int) -> None:
        G, V = self.G, self.V
        if x not in V:
            raise NotPresentError(G.format(x))
        d, pw = self.d, G.pow
        for a in range(d):
            for u in G.cluster_neighbors(x, a):
                if u not in V:
                    continue
                deg = cluster_degree(G, V, u, a)
                keys = self._keys[u]
                for c in range(a + 1, d + 1):
                    key = (c, u // pw[d - c], a, deg)
                    self.shadow[key].add(u)
                    keys.append(key)
        for key in self._keys.pop(x, ()):
            self.shadow[key].discard(x)
        V.remove(x)

    def retarget(self, depth: int, num: int) -> None:
        k = self.k
        S = self.untargeted[depth][num]
        child_sizes = self.V.sizes[depth + 1]
        base = num * k
        while S and child_sizes[base + self.target[depth][num] - 1] == 0:
            if len(S) == 1:
                (i,) = S
                self.target[depth][num] = i
                info = self.minfo.get((depth, num))
                if info is None:
                    self.minfo.pop((depth + 1, base + i - 1), None)
                else:
                    self.minfo[(depth + 1, base + i - 1)] = info
            else:
                if len(S) % self.rcycle == 1:
                    t = min(sorted(S), key=lambda i: child_sizes[base + i - 1])
                else:
                    info = self.minfo.get((depth, num))

                    def marked(i):
                        if info is None:
                            return 0
                        return len(self.shadow_set(depth + 1, base + i - 1, info[0], info[1]))

                    t = max(sorted(S), key=lambda i: (marked(i), -i))
                self.target[depth][num] = t
                self.minfo[(depth + 1, base + t - 1)] = (depth, math.ceil(Fraction(19 * (len(S) - 1), 20)))
            S.discard(self.target[depth][num])

    def trim(self, depth: int, num: int) -> int:
        """Remove one vertex by following targets down from the cluster."""
        if self.V.sizes[depth][num] == 0:
            raise ValueError("trim on an empty cluster")
        path = []
        k = self.k
        while depth < self.d:
            path.append((depth, num))
            num = num * k + self.target[depth][num] - 1
            depth += 1
            if self.V.sizes[depth][num] == 0:
                raise RuntimeError("target child is empty during trim")
        self.process_removal(num)
        for dep, nm in reversed(path):
            self.retarget(dep, nm)
        return num

    def delete(self, v: int) -> Set[int]:
        """Delete v and return the vertices pruned alongside it."""
        if v not in self.V:
            raise NotPresentError(self.G.format(v))
        self.process_removal(v)
        removed = {v}
        G = self.G
        for depth in range(self.d - 1, -1, -1):
            num = v // G.pow[self.d - depth]
            self.retarget(depth, num)
            count = min(self.rho * len(removed), self.V.sizes[depth][num])
            for _ in range(count):
                if self.V.sizes[depth][num] == 0:
                    break
                removed.add(self.trim(depth, num))
        removed.discard(v)
        return removed

    def ratio_bound(self) -> int:
        return (self.rho + 1) ** self.d - 1


class ReferencePruner:
    """Pruner with explicit per-cluster mark sets, used as a semantic cross-check."""

    def __init__(self, G: SemiHypercube, tau, mode: str = STRICT, rho: Optional[int] = None):
        _check_mode(mode)
        self.G = G
        self.k, self.d = G.k, G.d
        self.tau = coerce_tau(tau)
        self.mode = mode
        if mode == STRICT:
            Tau(self.tau.value, strict=True).check(self.d)
            if rho is not None:
                raise ParameterError("strict mode does not accept a custom rho")
        self.rho = rho if rho is not None else reference_rho(self.k, self.d, self.tau)
        self.V = VertexTrie(G)
        self.target = [[self.k] * G.pow[j] for j in range(self.d)]
        self.marks: Dict[Tuple[int, int], Set[int]] = defaultdict(set)

    def _degenerate(self, depth, num) -> bool:
        if depth >= self.d:
            return False
        k = self.k
        sizes = self.V.sizes[depth + 1][num * k:num * k + k]
        return sum(1 for s in sizes if s) == 1

    def _nonempty_children(self, depth, num) -> List[int]:
        k = self.k
        sizes = self.V.sizes[depth + 1][num * k:num * k + k]
        return [i + 1 for i, s in enumerate(sizes) if s]

    def mark(self, depth: int, num: int, vertices: Iterable[int]) -> None:
        vertices = set(vertices)
        while True:
            self.marks[(depth, num)] |= vertices
            if not self._degenerate(depth, num):
                return
            num = num * self.k + self.target[depth][num] - 1
            depth += 1

    def _low_degree(self, depth, num, child, threshold: Fraction) -> Set[int]:
        G = self.G
        lo, hi = G.cluster_range(G.cluster_of_num(depth + 1, num * self.k + child - 1))
        return {v for v in range(lo, hi)
                if v in self.V and cluster_degree(G, self.V, v, depth) < threshold}

    def retarget(self, depth: int, num: int) -> None:
        S = self._nonempty_children(depth, num)
        k = self.k
        if len(S) == 1:
            self.target[depth][num] = S[0]
            inherited = {v for v in self.marks.get((depth, num), ()) if v in self.V}
            self.mark(depth + 1, num * k + S[0] - 1, inherited)
        elif S:
            sizes = self.V.sizes[depth + 1]
            if len(S) % (2 * self.d + 1) == 1:
                t = min(S, key=lambda i: sizes[num * k + i - 1])
            else:
                mine = self.marks.get((depth, num), set())
                G = self.G

                def marked(i):
                    return sum(1 for v in mine if v in self.V and G.digit(v, depth) == i)

                t = max(S, key=lambda i: (marked(i), -i))
            self.target[depth][num] = t
            low = self._low_degree(depth, num, t, Fraction(19 * (len(S) - 1), 20))
            self.mark(depth + 1, num * k + t - 1, low)

    def trim(self, depth: int, num: int) -> int:
        if self.V.sizes[depth][num] == 0:
            raise ValueError("trim on an empty cluster")
        if depth == self.d:
            self.V.remove(num)
            return num
        child = num * self.k + self.target[depth][num] - 1
        out = self.trim(depth + 1, child)
        if self.V.sizes[depth + 1][child] == 0:
            self.retarget(depth, num)
        return out

    def delete(self, v: int) -> Set[int]:
        if v not in self.V:
            raise NotPresentError(self.G.format(v))
        G, k = self.G, self.k
        self.V.remove(v)
        pruned: Set[int] = set()
        for depth in range(self.d - 1, -1, -1):
            num = v // G.pow[self.d - depth]
            t = self.target[depth][num]
            child = num * k + t - 1
            if self.V.sizes[depth + 1][child] == 0:
                self.retarget(depth, num)
            else:
                kprime = sum(1 for j in self._nonempty_children(depth, num) if j != t)
                already = self.marks.get((depth + 1, child), set())
                low = self._low_degree(depth, num, t, Fraction(19 * kprime, 20)) - already
                self.mark(depth + 1, child, low)
            count = min(self.rho * (len(pruned) + 1), self.V.sizes[depth][num])
            for _ in range(count):
                if self.V.sizes[depth][num] == 0:
                    break
                pruned.add(self.trim(depth, num))
        return pruned


class BatchedPruner:
    """Amortized pruner: after batch i no cluster is (tau*i/b)-critical."""

    def __init__(self, G: SemiHypercube, tau, batches: int):
        if batches < 1:
            raise ValueError("need at least one batch")
        self.G = G
        self.tau = coerce_tau(tau)
        self.b = batches
        self.i = 0
        self.V = VertexTrie(G)

    def threshold(self, i: Optional[int] = None) -> Fraction:
        i = self.i if i is None else i
        return self.tau.value * i / self.b

    def ratio_bound(self) -> Fraction:
        return (self.b / self.tau.value) ** self.G.d - 1

    def batch_delete(self, vertices: Iterable[int]) -> Set[int]:
        if self.i >= self.b:
            raise BatchBudgetError(f"all {self.b} batches used")
        vertices = set(vertices)
        for v in vertices:
            if v not in self.V:
                raise NotPresentError(self.G.format(v))
        self.i += 1
        G, V = self.G, self.V
        for v in vertices:
            V.remove(v)
        tau_i = Tau(self.threshold()) if self.threshold() > 0 else None
        pruned: Set[int] = set()
        if tau_i is None:
            return pruned
        # bottom-up over ancestors of deleted vertices; emptying a cluster only
        # changes the sizes of its ancestors, which are visited later
        for depth in range(G.d - 1, -1, -1):
            nums = sorted({v // G.pow[G.d - depth] for v in vertices})
            for num in nums:
                if critical_at(G, V, depth, num, tau_i):
                    for w in list(V.members(G.cluster_of_num(depth, num))):
                        V.remove(w)
                        pruned.add(w)
        return pruned
