"""Independent brute-force oracles used across the test suite.

These deliberately avoid the library's own algorithms: enumeration instead of
generating series, explicit set-partition listing instead of factorial
formulas.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def enumerate_parent_arrays(n):
    """All (n-1)! parent arrays of increasing trees on n vertices."""
    if n == 1:
        yield ()
        return
    yield from itertools.product(*(range(t) for t in range(1, n)))


def height_of_parents(parents) -> int:
    depths = [0] * (len(parents) + 1)
    h = 0
    for t, p in enumerate(parents, start=1):
        depths[t] = depths[p] + 1
        h = max(h, depths[t])
    return h


def exact_height_pmf(n) -> dict[int, Fraction]:
    """Height law by full enumeration (n <= 8 keeps this fast)."""
    total = math.factorial(n - 1)
    counts: dict[int, int] = {}
    for pa in enumerate_parent_arrays(n):
        h = height_of_parents(pa)
        counts[h] = counts.get(h, 0) + 1
    return {h: Fraction(c, total) for h, c in sorted(counts.items())}


def compositions(n, m):
    """All compositions of n into m positive parts."""
    if m == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - m + 2):
        for rest in compositions(n - first, m - 1):
            yield (first,) + rest


def count_qualifying_partitions(N: int, block: int, rem_block: int, blocks: int) -> int:
    """Number of set partitions of {0..N-1} into `blocks` blocks where
    blocks-1 have size `block` and one has size `rem_block`, by exhaustive
    leader-based enumeration (the least unplaced element starts each block)."""
    sizes = sorted([block] * (blocks - 1) + [rem_block], reverse=True)

    def rec(remaining: frozenset, multiset: tuple) -> int:
        if not multiset:
            return 1 if not remaining else 0
        leader = min(remaining)
        rest = sorted(remaining - {leader})
        total = 0
        for size in sorted(set(multiset)):
            idx = multiset.index(size)
            next_multiset = multiset[:idx] + multiset[idx + 1:]
            for companions in itertools.combinations(rest, size - 1):
                total += rec(remaining - {leader} - set(companions), next_multiset)
        return total

    return rec(frozenset(range(N)), tuple(sizes))


def all_set_partitions(items):
    """Every set partition of `items` (small inputs only)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def count_qualifying_partitions_full(N: int, block: int, rem_block: int, blocks: int) -> int:
    """Same count by filtering the complete set-partition list (N <= 9)."""
    want = sorted([block] * (blocks - 1) + [rem_block])
    hits = 0
    for part in all_set_partitions(range(N)):
        if sorted(len(b) for b in part) == want:
            hits += 1
    return hits
