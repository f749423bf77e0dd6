"""Random recursive tree generation and per-tree statistics.

A tree on n vertices {0, .., n-1} is stored as the parent array of vertices
1..n-1 (vertex 0 is the root).  Vertex t always attaches to a vertex in
{0..t-1}, which is exactly the increasing-tree property.  Three generators
produce the same uniform-attachment law through different mechanisms:

* ``grow_uniform``  -- unbiased integer sampling (power-of-two rejection),
* ``grow_floor_map`` -- parent of t is floor(t * U_t),
* ``grow_yule``     -- event scheduler for a unit-rate pure-birth process.

Trees are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "RecursiveTree",
    "TreeStats",
    "SubtreeDecomposition",
    "grow_uniform",
    "grow_floor_map",
    "grow_yule",
    "tree_stats",
    "subtree_decomposition",
    "ancestor",
]

# mask rejection consumes ~1.39 random words per attachment on average
_WORDS_PER_DRAW = 1.5


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RecursiveTree:
    """Rooted tree where parents[i] is the parent of vertex i+1 and
    parents[i] <= i (every vertex attaches to an earlier one)."""

    n: int
    parents: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a tree needs at least one vertex")
        p = np.ascontiguousarray(self.parents, dtype=np.int64)
        if p.shape != (self.n - 1,):
            raise ValueError("parent array must have length n-1")
        if self.n > 1 and (np.any(p < 0) or np.any(p >= np.arange(1, self.n))):
            raise ValueError("vertex t may only attach to a vertex in {0..t-1}")
        object.__setattr__(self, "parents", _frozen(p))


@dataclass(frozen=True)
class TreeStats:
    """depths[x] = dist(root, x); height = max depth; level_sizes[k] = number
    of vertices at depth exactly k."""

    depths: np.ndarray
    height: int
    level_sizes: np.ndarray


@dataclass(frozen=True)
class SubtreeDecomposition:
    """Sizes of the components containing vertices 0..m-1 after removing all
    edges whose two endpoints both have labels < m."""

    m: int
    sizes: np.ndarray


def _uniform_parents(n: int, stream: np.random.Generator,
                     out: np.ndarray | None = None) -> np.ndarray:
    """Parent array with parent(t) exactly uniform on {0..t-1}."""
    parents = out if out is not None else np.empty(max(n - 1, 0), dtype=np.int64)
    t = 1
    while t < n:
        need = int(_WORDS_PER_DRAW * (n - t)) + 16
        bits = stream.integers(0, 2**64, size=need, dtype=np.uint64)
        t, _ = _kernels.fill_uniform_parents(bits, n, parents, t)
    return parents


def grow_uniform(n: int, stream: np.random.Generator) -> RecursiveTree:
    """Attach each new vertex to an existing vertex chosen uniformly at random.

    Integer draws use rejection against the next power of two on raw 64-bit
    words, so the attachment distribution is exactly uniform (no modulo bias).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return RecursiveTree(n, _uniform_parents(n, stream))


def grow_floor_map(n: int, stream: np.random.Generator) -> RecursiveTree:
    """Attach vertex t to floor(t * U_t), U_t uniform on [0, 1).

    Since U < 1, the product t*U rounds to a double strictly below t, so the
    floor always lands in {0..t-1}; the law is identical to grow_uniform.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = stream.random(n - 1)
    parents = (np.arange(1, n) * u).astype(np.int64)
    return RecursiveTree(n, parents)


def grow_yule(n: int, stream: np.random.Generator):
    """Family tree of a unit-rate binary-fission birth process at its n-th birth.

    Every living individual carries an independent unit exponential clock; the
    next-event scheduler pops the earliest clock, records the birth, and gives
    both the parent and the newborn fresh clocks.  By memorylessness the firing
    individual is uniform among the living, so the tree's law equals
    grow_uniform's.  Returns (tree, birth_times) with birth_times[0] = 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parents = np.empty(max(n - 1, 0), dtype=np.int64)
    births = np.zeros(n, dtype=np.float64)
    clocks = [(stream.standard_exponential(), 0)]
    for t in range(1, n):
        when, who = heapq.heappop(clocks)
        births[t] = when
        parents[t - 1] = who
        heapq.heappush(clocks, (when + stream.standard_exponential(), who))
        heapq.heappush(clocks, (when + stream.standard_exponential(), t))
    return RecursiveTree(n, parents), _frozen(births)


def tree_stats(tree: RecursiveTree) -> TreeStats:
    """Depths, height and level sizes in one forward pass."""
    depths = np.empty(tree.n, dtype=np.int64)
    height = int(_kernels.depths_from_parents(tree.parents, depths))
    level_sizes = np.bincount(depths)
    return TreeStats(_frozen(depths), height, _frozen(level_sizes))


def subtree_decomposition(tree: RecursiveTree, m: int) -> SubtreeDecomposition:
    """Component sizes after cutting every edge among the first m vertices.

    sizes[j] counts the vertices whose ancestor chain, truncated at the first
    vertex with label < m, ends at vertex j; the sizes sum to n.
    """
    if not 1 <= m <= tree.n:
        raise ValueError("need 1 <= m <= n")
    comp = np.empty(tree.n, dtype=np.int64)
    _kernels.component_roots(tree.parents, m, comp)
    sizes = np.bincount(comp, minlength=m)
    return SubtreeDecomposition(m, _frozen(sizes))


def ancestor(tree: RecursiveTree, x: int, k: int) -> int:
    """k-fold parent iterate of x, clamped at the root.

    Returns 0 once the chain reaches the root; consequently the depth of x is
    the smallest k with ancestor(tree, x, k) == 0, and dist(root, x) >= k iff
    ancestor(tree, x, k) >= 1.
    """
    if not 0 <= x < tree.n:
        raise ValueError("vertex out of range")
    if k < 0:
        raise ValueError("k must be >= 0")
    cur = x
    for _ in range(k):
        if cur == 0:
            break
        cur = int(tree.parents[cur - 1])
    return cur
