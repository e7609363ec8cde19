"""Vertex labels, the cluster tree, matching storage and the live vertex set.

Vertices of a (k, d) semi-hypercube are the words of length d over the
alphabet {1..k}.  Internally a vertex is the integer obtained by reading its
digits (shifted to 0..k-1) in base k, most significant digit first, so every
cluster (a common prefix) occupies a contiguous index range.  Clusters are
tuples of digits; the empty tuple is the root.
"""

from __future__ import annotations

from array import array
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

DEFAULT_SIZE_GUARD = 2 ** 22

Cluster = Tuple[int, ...]


class CapacityError(ValueError):
    """Requested instance exceeds the configured size guard."""


class NotPresentError(KeyError):
    """A vertex was expected in the live vertex set but is not there."""


class EmptyClusterError(ValueError):
    """An operation needed a nonempty cluster."""


class GraphFormatError(ValueError):
    """A graph file is malformed or violates the matching structure."""


def make_rng(seed=None) -> np.random.Generator:
    """Seeded numpy generator; passes an existing generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def lcp(a: Sequence[int], b: Sequence[int]) -> Cluster:
    """Longest common prefix of two digit sequences."""
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return tuple(out)


def format_label(digits: Sequence[int]) -> str:
    return ".".join(str(x) for x in digits)


def parse_label(text: str) -> Tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(x) for x in text.split("."))


class SemiHypercube:
    """Static edge universe of a (k, d) semi-hypercube.

    ``partner(v, depth, sibling)`` answers in O(1) from a flat table holding,
    for every vertex, its matched vertex in each sibling child cluster at each
    depth.  The slot for sibling ``i`` at depth ``j`` is ``(i - 1) + k * j``;
    the vertex's own digit slot holds -1.
    """

    def __init__(self, k: int, d: int, table, size_guard: int = DEFAULT_SIZE_GUARD):
        check_size(k, d, size_guard)
        self.k = k
        self.d = d
        self.n = k ** d
        self.pow = [k ** i for i in range(d + 1)]
        self._kd = k * d
        self._nbr = table

    # label algebra

    def digits(self, v: int) -> Tuple[int, ...]:
        out = []
        for j in range(self.d):
            out.append((v // self.pow[self.d - 1 - j]) % self.k + 1)
        return tuple(out)

    def vertex(self, digits: Sequence[int]) -> int:
        if len(digits) != self.d:
            raise ValueError(f"label {tuple(digits)} has length {len(digits)}, expected {self.d}")
        v = 0
        for x in digits:
            if not 1 <= x <= self.k:
                raise ValueError(f"digit {x} outside 1..{self.k}")
            v = v * self.k + (x - 1)
        return v

    def format(self, v: int) -> str:
        return format_label(self.digits(v))

    def parse(self, text: str) -> int:
        return self.vertex(parse_label(text))

    def digit(self, v: int, depth: int) -> int:
        """Digit of v at position ``depth`` (1-based value)."""
        return (v // self.pow[self.d - 1 - depth]) % self.k + 1

    def prefix(self, v: int, depth: int) -> Cluster:
        return self.digits(v)[:depth]

    def cluster_num(self, v: int, depth: int) -> int:
        return v // self.pow[self.d - depth]

    def cnum(self, sigma: Sequence[int]) -> int:
        num = 0
        for x in sigma:
            num = num * self.k + (x - 1)
        return num

    def cluster_of_num(self, depth: int, num: int) -> Cluster:
        out = []
        for _ in range(depth):
            num, r = divmod(num, self.k)
            out.append(r + 1)
        return tuple(reversed(out))

    def cluster_range(self, sigma: Sequence[int]) -> Tuple[int, int]:
        span = self.pow[self.d - len(sigma)]
        lo = self.cnum(sigma) * span
        return lo, lo + span

    def lcp_depth(self, u: int, v: int) -> int:
        depth = 0
        while depth < self.d and self.digit(u, depth) == self.digit(v, depth):
            depth += 1
        return depth

    def in_cluster(self, v: int, sigma: Sequence[int]) -> bool:
        lo, hi = self.cluster_range(sigma)
        return lo <= v < hi

    # edges

    def partner(self, v: int, depth: int, sibling: int) -> int:
        """Matched vertex of v in child ``sibling`` of its depth-``depth`` ancestor."""
        w = self._nbr[v * self._kd + (sibling - 1) + self.k * depth]
        if w < 0:
            raise ValueError("sibling equals the vertex's own digit")
        return w

    def neighbors(self, v: int) -> List[int]:
        base = v * self._kd
        return [w for w in self._nbr[base:base + self._kd] if w >= 0]

    def cluster_neighbors(self, v: int, depth: int) -> List[int]:
        """The k-1 matching partners of v across children of its depth ancestor."""
        base = v * self._kd + self.k * depth
        return [w for w in self._nbr[base:base + self.k] if w >= 0]

    def edges(self) -> Iterator[Tuple[int, int]]:
        for u in range(self.n):
            for w in self.neighbors(u):
                if u < w:
                    yield u, w

    def num_edges(self) -> int:
        return self.n * (self.k - 1) * self.d // 2

    def matching(self, sigma: Sequence[int], i: int, j: int) -> List[Tuple[int, int]]:
        """Edges of the matching between children i and j of cluster sigma."""
        depth = len(sigma)
        lo, hi = self.cluster_range(tuple(sigma) + (i,))
        return [(u, self.partner(u, depth, j)) for u in range(lo, hi)]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        depth = self.lcp_depth(u, v)
        return self.partner(u, depth, self.digit(v, depth)) == v

    def edge_depth(self, u: int, v: int) -> int:
        """Depth of the cluster whose matchings contain edge (u, v)."""
        return self.lcp_depth(u, v)

    def check_matchings(self) -> None:
        """Raise GraphFormatError unless every stored matching is a perfect matching."""
        k, d = self.k, self.d
        for v in range(self.n):
            for depth in range(d):
                own = self.digit(v, depth)
                base = v * self._kd + k * depth
                for sib in range(1, k + 1):
                    w = self._nbr[base + sib - 1]
                    if sib == own:
                        if w != -1:
                            raise GraphFormatError(f"self slot set for {self.format(v)}")
                        continue
                    if w < 0:
                        raise GraphFormatError(f"{self.format(v)} unmatched toward sibling {sib} at depth {depth}")
                    if self.lcp_depth(v, w) != depth or self.digit(w, depth) != sib:
                        raise GraphFormatError(f"edge {self.format(v)}-{self.format(w)} in wrong slot")
                    if self._nbr[w * self._kd + own - 1 + k * depth] != v:
                        raise GraphFormatError(f"edge {self.format(v)}-{self.format(w)} not symmetric")


def check_size(k: int, d: int, size_guard: int = DEFAULT_SIZE_GUARD) -> None:
    if k < 2 or d < 1:
        raise ValueError(f"need k >= 2 and d >= 1, got k={k}, d={d}")
    if k ** d > size_guard:
        raise CapacityError(f"k^d = {k ** d} exceeds size guard {size_guard}")


def _to_array(table: np.ndarray) -> array:
    out = array("i")
    out.frombytes(np.ascontiguousarray(table, dtype=np.int32).tobytes())
    return out


def _fill_table(k: int, d: int, perms_for: Callable[[int, int, int, int, int], np.ndarray]) -> np.ndarray:
    n = k ** d
    table = np.full((n, k * d), -1, dtype=np.int64)
    for depth in range(d):
        nclust = k ** depth
        m = k ** (d - depth - 1)
        base = (np.arange(nclust, dtype=np.int64) * (k * m))[:, None]
        pos = np.arange(m, dtype=np.int64)[None, :]
        for i in range(1, k + 1):
            for j in range(i + 1, k + 1):
                perms = perms_for(depth, nclust, m, i, j)
                src = (base + (i - 1) * m + pos).ravel()
                dst = (base + (j - 1) * m + perms).ravel()
                table[src, (j - 1) + k * depth] = dst
                table[dst, (i - 1) + k * depth] = src
    return table.reshape(-1)


def build_random_shc(k: int, d: int, seed=None, size_guard: int = DEFAULT_SIZE_GUARD) -> SemiHypercube:
    """Semi-hypercube whose matchings are independent uniform permutations."""
    check_size(k, d, size_guard)
    rng = make_rng(seed)

    def perms(depth, nclust, m, i, j):
        return rng.permuted(np.tile(np.arange(m, dtype=np.int64), (nclust, 1)), axis=1)

    return SemiHypercube(k, d, _to_array(_fill_table(k, d, perms)), size_guard)


def build_hypercube_style(k: int, d: int, size_guard: int = DEFAULT_SIZE_GUARD) -> SemiHypercube:
    """Semi-hypercube matching vertices with identical suffixes (Hamming graph)."""
    check_size(k, d, size_guard)

    def perms(depth, nclust, m, i, j):
        return np.tile(np.arange(m, dtype=np.int64), (nclust, 1))

    return SemiHypercube(k, d, _to_array(_fill_table(k, d, perms)), size_guard)


def build_from_matchings(k: int, d: int, overrides: dict, default: str = "identity",
                         seed=None, size_guard: int = DEFAULT_SIZE_GUARD) -> SemiHypercube:
    """Semi-hypercube with selected matchings given explicitly.

    ``overrides`` maps ``(sigma, i, j)`` with i < j to a permutation ``perm``
    of range(k^(d-|sigma|-1)): position p of child i is matched to position
    ``perm[p]`` of child j.  Other matchings are identity or random.
    """
    check_size(k, d, size_guard)
    rng = make_rng(seed)
    by_depth = {}
    for (sigma, i, j), perm in overrides.items():
        if not i < j:
            raise ValueError("override keys need i < j")
        by_depth.setdefault((len(sigma), i, j), {})[sigma] = perm

    def perms(depth, nclust, m, i, j):
        if default == "random":
            out = rng.permuted(np.tile(np.arange(m, dtype=np.int64), (nclust, 1)), axis=1)
        else:
            out = np.tile(np.arange(m, dtype=np.int64), (nclust, 1))
        for sigma, perm in by_depth.get((depth, i, j), {}).items():
            row = np.asarray(perm, dtype=np.int64)
            if sorted(row.tolist()) != list(range(m)):
                raise ValueError(f"override for {sigma},{i},{j} is not a permutation")
            num = 0
            for x in sigma:
                num = num * k + (x - 1)
            out[num] = row
        return out

    return SemiHypercube(k, d, _to_array(_fill_table(k, d, perms)), size_guard)


class VertexTrie:
    """Live vertex set with per-cluster sizes.

    Sizes are kept per depth in flat lists indexed by cluster number, so
    membership, size lookup and removal cost O(d) and uniform sampling from
    a cluster costs O(k d).
    """

    def __init__(self, G: SemiHypercube, members: Optional[Iterable[int]] = None):
        self.G = G
        d, k = G.d, G.k
        if members is None:
            self.alive = bytearray(b"\x01") * G.n
            self.sizes = [[G.pow[d - j]] * G.pow[j] for j in range(d + 1)]
        else:
            self.alive = bytearray(G.n)
            self.sizes = [[0] * G.pow[j] for j in range(d + 1)]
            for v in members:
                self.add(v)

    def copy(self) -> "VertexTrie":
        out = VertexTrie.__new__(VertexTrie)
        out.G = self.G
        out.alive = bytearray(self.alive)
        out.sizes = [list(level) for level in self.sizes]
        return out

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.G.n and self.alive[v] == 1

    def __len__(self) -> int:
        return self.sizes[0][0]

    def __iter__(self) -> Iterator[int]:
        return (v for v in range(self.G.n) if self.alive[v])

    def size(self, sigma: Sequence[int]) -> int:
        return self.sizes[len(sigma)][self.G.cnum(sigma)]

    def size_at(self, depth: int, num: int) -> int:
        return self.sizes[depth][num]

    def remove(self, v: int) -> None:
        if v not in self:
            raise NotPresentError(self.G.format(v))
        self.alive[v] = 0
        G = self.G
        for j in range(G.d + 1):
            self.sizes[j][v // G.pow[G.d - j]] -= 1

    def add(self, v: int) -> None:
        if v in self:
            raise ValueError(f"{self.G.format(v)} already present")
        self.alive[v] = 1
        G = self.G
        for j in range(G.d + 1):
            self.sizes[j][v // G.pow[G.d - j]] += 1

    def members(self, sigma: Sequence[int] = ()) -> Iterator[int]:
        lo, hi = self.G.cluster_range(sigma)
        alive = self.alive
        return (v for v in range(lo, hi) if alive[v])

    def child_sizes(self, sigma: Sequence[int]) -> List[int]:
        """Sizes of children 1..k of a non-leaf cluster."""
        depth = len(sigma)
        first = self.G.cnum(sigma) * self.G.k
        return self.sizes[depth + 1][first:first + self.G.k]

    def nonempty_children(self, sigma: Sequence[int]) -> List[int]:
        return [i + 1 for i, s in enumerate(self.child_sizes(sigma)) if s > 0]

    def sample(self, sigma: Sequence[int], rng) -> int:
        """Uniform vertex of cluster sigma."""
        depth = len(sigma)
        num = self.G.cnum(sigma)
        total = self.sizes[depth][num]
        if total == 0:
            raise EmptyClusterError(f"cluster {format_label(sigma) or 'root'} is empty")
        r = int(rng.integers(total))
        k = self.G.k
        while depth < self.G.d:
            level = self.sizes[depth + 1]
            child = num * k
            while r >= level[child]:
                r -= level[child]
                child += 1
            num = child
            depth += 1
        return num


def edge_to_sibling(G: SemiHypercube, V: VertexTrie, v: int, depth: int, sibling: int) -> Optional[int]:
    """Live matched partner of v in sibling child at ``depth``, or None."""
    if v not in V:
        raise NotPresentError(G.format(v))
    if not 0 <= depth < G.d or not 1 <= sibling <= G.k:
        raise ValueError("depth or sibling out of range")
    if sibling == G.digit(v, depth):
        raise ValueError("sibling equals the vertex's own digit")
    w = G.partner(v, depth, sibling)
    return w if w in V else None


def sample_uniform(V: VertexTrie, sigma: Sequence[int], rng) -> int:
    return V.sample(sigma, rng)


# file formats

def write_graph(G: SemiHypercube, fh) -> None:
    fh.write(f"shc {G.k} {G.d}\n")
    for u, v in G.edges():
        fh.write(f"{G.format(u)} {G.format(v)}\n")


def read_graph(fh, size_guard: int = DEFAULT_SIZE_GUARD) -> SemiHypercube:
    header = fh.readline().split()
    if len(header) != 3 or header[0] != "shc":
        raise GraphFormatError("expected header 'shc k d'")
    k, d = int(header[1]), int(header[2])
    check_size(k, d, size_guard)
    n = k ** d
    table = array("i", [-1]) * (n * k * d)
    G = SemiHypercube(k, d, table, size_guard)
    count = 0
    for lineno, line in enumerate(fh, start=2):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v'")
        u, v = G.parse(parts[0]), G.parse(parts[1])
        if u == v:
            raise GraphFormatError(f"line {lineno}: self loop")
        depth = G.lcp_depth(u, v)
        for a, b in ((u, v), (v, u)):
            slot = a * G._kd + G.digit(b, depth) - 1 + k * depth
            if table[slot] != -1:
                raise GraphFormatError(f"line {lineno}: {G.format(a)} matched twice toward one sibling")
            table[slot] = b
        count += 1
    if count != G.num_edges():
        raise GraphFormatError(f"expected {G.num_edges()} edges, found {count}")
    G.check_matchings()
    return G


def write_vertices(G: SemiHypercube, vertices: Iterable[int], fh) -> None:
    for v in sorted(vertices):
        fh.write(G.format(v) + "\n")


def read_vertices(G: SemiHypercube, fh) -> List[int]:
    out = []
    for line in fh:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(G.parse(line))
    return out
