"""Client-to-bucket assignment keeping every bucket load at floor or ceil of the average."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, Set, Tuple


class BalancerError(ValueError):
    pass


def _smallest(items, count):
    return heapq.nsmallest(count, items) if count > 0 else []


@dataclass
class LoadBalancer:
    """Assignment ``assign`` of clients to buckets with loads L or L+1.

    Ties among interchangeable clients or buckets go to the smallest
    identifier, so replays are deterministic.
    """

    L: int = 0
    low: Set[Hashable] = field(default_factory=set)
    high: Set[Hashable] = field(default_factory=set)
    assign: Dict[Hashable, Hashable] = field(default_factory=dict)
    clients_of: Dict[Hashable, Set[Hashable]] = field(default_factory=dict)

    @property
    def clients(self):
        return self.assign.keys()

    @property
    def buckets(self):
        return self.clients_of.keys()

    def load(self, bucket) -> int:
        return len(self.clients_of[bucket])

    def ceil_load(self) -> int:
        """Ceiling of clients per bucket (0 with no buckets)."""
        nb = len(self.clients_of)
        return -(-len(self.assign) // nb) if nb else 0

    def check(self) -> None:
        """Raise AssertionError if an internal invariant is broken."""
        nb, nc = len(self.clients_of), len(self.assign)
        assert self.low | self.high == set(self.clients_of)
        assert not self.low & self.high
        if nb:
            assert self.L == nc // nb
            assert len(self.high) == nc % nb
        else:
            assert nc == 0
        for e, cs in self.clients_of.items():
            assert len(cs) == (self.L + 1 if e in self.high else self.L)
            for c in cs:
                assert self.assign[c] == e
        assert sum(len(cs) for cs in self.clients_of.values()) == nc

    def update(self, add_clients: Iterable = (), remove_clients: Iterable = (),
               add_buckets: Iterable = (), remove_buckets: Iterable = ()):
        """Apply one batch of changes.

        Returns ``(assigned, unassigned, previous)``: clients that received a
        bucket, clients that lost one, and the pre-update bucket of each
        member of ``unassigned``.
        """
        I_plus = set(add_clients)
        I_minus = set(remove_clients)
        E_plus = set(add_buckets)
        E_minus = set(remove_buckets)
        B, Binv = self.assign, self.clients_of

        for c in I_minus:
            if c not in B:
                raise BalancerError(f"unknown client {c!r}")
        for c in I_plus:
            if c in B and c not in I_minus:
                raise BalancerError(f"client {c!r} already present")
        for e in E_minus:
            if e not in Binv:
                raise BalancerError(f"unknown bucket {e!r}")
        for e in E_plus:
            if e in Binv:
                raise BalancerError(f"bucket {e!r} already present")
        n_clients = len(B) + len(I_plus) - len(I_minus)
        n_buckets = len(Binv) + len(E_plus) - len(E_minus)
        if n_buckets == 0 and n_clients > 0:
            raise BalancerError("clients remain but no buckets")
        L_new = n_clients // n_buckets if n_buckets else 0

        # 1. drop removed buckets; their clients need new homes unless removed too
        unassigned: Set = set()
        previous: Dict = {}
        for e in E_minus:
            for c in Binv[e]:
                unassigned.add(c)
                previous[c] = e
        both = I_minus & unassigned
        pending = set(unassigned - both)
        I_minus -= both
        for e in E_minus:
            del Binv[e]

        # 2. fresh buckets start empty
        for e in E_plus:
            Binv[e] = set()

        # 3. detach removed clients; their buckets need refilling
        unassigned |= I_minus
        touched = set()
        for c in I_minus:
            e = B[c]
            previous[c] = e
            Binv[e].discard(c)
            touched.add(e)
        E_plus |= touched
        for c in both | I_minus:
            del B[c]
        # clients re-added in the same update are new clients from here on
        pending |= I_plus

        # 4. reclassify buckets for the new load
        self.low -= E_plus | E_minus
        self.high -= E_plus | E_minus
        if L_new == self.L + 1:
            E_plus |= self.low
            self.low, self.high = self.high, set()
        elif L_new == self.L - 1:
            E_plus |= self.high
            self.high, self.low = self.low, set()
        elif abs(L_new - self.L) >= 2:
            E_plus |= self.low | self.high
            self.low, self.high = set(), set()

        # 5. shave overfull buckets down to L_new + 1
        for e in sorted(E_plus):
            extra = len(Binv[e]) - (L_new + 1)
            if extra >= 0:
                trimmed = _smallest(Binv[e], extra)
                for c in trimmed:
                    Binv[e].discard(c)
                    pending.add(c)
                    unassigned.add(c)
                    previous[c] = e
                self.high.add(e)
                E_plus.discard(e)

        # 6. borrow one client from high buckets when the pool is short
        need = sum(L_new - len(Binv[e]) for e in E_plus)
        short = need - len(pending)
        if short > 0:
            donors = _smallest(self.high, short)
            if len(donors) < short:
                raise BalancerError("not enough full buckets to cover deficit")
            for e in donors:
                c = min(Binv[e])
                Binv[e].discard(c)
                pending.add(c)
                unassigned.add(c)
                previous[c] = e
            self.high -= set(donors)
            self.low |= set(donors)

        assigned = set(pending)

        # 7. fill the buckets needing clients up to L_new
        for e in sorted(E_plus):
            take = _smallest(pending, L_new - len(Binv[e]))
            for c in take:
                pending.discard(c)
                Binv[e].add(c)
                B[c] = e
        self.low |= E_plus

        # 8. leftovers raise some low buckets to L_new + 1
        grow = _smallest(self.low, len(pending))
        if len(grow) < len(pending):
            raise BalancerError("not enough low buckets for leftover clients")
        for e, c in zip(grow, sorted(pending)):
            B[c] = e
            Binv[e].add(c)
        self.low -= set(grow)
        self.high |= set(grow)

        self.L = L_new
        return assigned, unassigned, {c: previous[c] for c in unassigned}


def recourse_bound(n_clients: int, n_buckets: int, added: int, removed: int,
                   buckets_added: int, buckets_removed: int) -> int:
    """Allowed |assigned| + |unassigned| for one update, from pre-update counts."""
    ceil = -(-n_clients // n_buckets) if n_buckets else 0
    return added + 3 * removed + 2 * ceil * (buckets_added + buckets_removed)
