"""Seeded, reproducible Monte Carlo estimators for tree-height tail events.

Replicate i draws from its own stream, keyed by a 64-bit avalanche mix of
(root_seed, i); work is dealt to a thread pool in fixed chunks and every
per-replicate value lands in a slot indexed by i, with exactly rounded (fsum)
aggregation.  Estimates are therefore bitwise identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .analytic_bounds import lower_height_threshold, upper_height_threshold
from .tree_core import RecursiveTree, _uniform_parents

__all__ = [
    "TailEstimate",
    "TiltConfig",
    "derive_stream",
    "estimate_upper_tail",
    "estimate_lower_tail_is",
    "estimate_pi_tail",
    "estimate_good_vertices",
    "simulate_heights",
    "is_good_vertex",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_CHUNK = 4096


@dataclass(frozen=True)
class TailEstimate:
    """Unbiased Monte Carlo estimate with its standard error and provenance."""

    value: float
    std_error: float
    reps: int
    root_seed: int
    event_desc: str


@dataclass(frozen=True)
class TiltConfig:
    """Attachment proposal theta**depth; theta = 1 is uniform attachment."""

    theta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_stream(root_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one replicate, pure function of (root_seed, index)."""
    key = _mix64((root_seed + _GOLDEN * (index + 1)) & _MASK64)
    return np.random.Generator(np.random.PCG64(key))


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        return workers
    env = os.environ.get("RRT_LDP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_replicates(reps, workers, fill_chunk, n_outputs=1):
    """Run fill_chunk(start, stop, outs) over fixed chunks; outs are arrays
    indexed by replicate, so the schedule cannot affect the result."""
    outs = [np.empty(reps) for _ in range(n_outputs)]
    spans = [(s, min(s + _CHUNK, reps)) for s in range(0, reps, _CHUNK)]
    w = _worker_count(workers)
    if w <= 1 or len(spans) == 1:
        for s, e in spans:
            fill_chunk(s, e, outs)
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            list(pool.map(lambda span: fill_chunk(span[0], span[1], outs), spans))
    return outs


def _indicator_stats(values: np.ndarray, reps: int) -> tuple[float, float]:
    p = math.fsum(values) / reps
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / reps)


def _sample_stats(values: np.ndarray, reps: int) -> tuple[float, float]:
    mean = math.fsum(values) / reps
    m2 = math.fsum((v - mean) ** 2 for v in values)
    return mean, math.sqrt(m2) / reps


def estimate_upper_tail(n: int, beta: float, reps: int, root_seed: int,
                        workers: int | None = None) -> TailEstimate:
    """P(height >= beta * ln n) by plain Monte Carlo over uniform-attachment
    trees; the integer event is height >= ceil(beta * ln n)."""
    if n < 2 or beta <= 0 or reps < 1:
        raise ValueError("need n >= 2, beta > 0, reps >= 1")
    b = upper_height_threshold(n, beta)
    desc = f"height >= {b} (n={n}, beta={beta})"
    if b > n - 1:
        return TailEstimate(0.0, 0.0, reps, root_seed, desc + " [impossible]")

    def fill(start, stop, outs):
        out = outs[0]
        parents = np.empty(n - 1, dtype=np.int64)
        depths = np.empty(n, dtype=np.int64)
        for i in range(start, stop):
            g = derive_stream(root_seed, i)
            _uniform_parents(n, g, out=parents)
            h = _kernels.depths_from_parents(parents, depths)
            out[i] = 1.0 if h >= b else 0.0

    (vals,) = _run_replicates(reps, workers, fill)
    p, se = _indicator_stats(vals, reps)
    return TailEstimate(p, se, reps, root_seed, desc)


def _tilted_samples(n, theta, reps, root_seed, workers):
    """Per-replicate (height, log likelihood ratio) under the depth tilt."""

    def fill(start, stop, outs):
        hs, ls = outs
        counts = np.empty(n, dtype=np.int64)
        pows = np.empty(n, dtype=np.float64)
        for i in range(start, stop):
            g = derive_stream(root_seed, i)
            u = g.random(n - 1)
            h, ll = _kernels.tilted_growth(u, theta, counts, pows)
            hs[i] = h
            ls[i] = ll

    return _run_replicates(reps, workers, fill, n_outputs=2)


def estimate_lower_tail_is(n: int, alpha: float, tilt: TiltConfig, reps: int,
                           root_seed: int, workers: int | None = None) -> TailEstimate:
    """P(height <= floor(alpha*e*ln n)) by importance sampling.

    Trees grow under the tilted law where vertex t attaches to v with
    probability theta^depth(v) / sum_w theta^depth(w); each replicate carries
    the exact likelihood ratio prod_t (1/t) / p_tilt(parent_t), accumulated in
    log space, so the weighted indicator mean is unbiased for the target.
    """
    if n < 2 or reps < 1:
        raise ValueError("need n >= 2 and reps >= 1")
    thr = lower_height_threshold(n, alpha)
    heights, loglr = _tilted_samples(n, tilt.theta, reps, root_seed, workers)
    vals = np.zeros(reps)
    hit = heights <= thr
    vals[hit] = np.exp(loglr[hit])
    mean, se = _sample_stats(vals, reps)
    desc = f"height <= {thr} (n={n}, alpha={alpha}, theta={tilt.theta})"
    return TailEstimate(mean, se, reps, root_seed, desc)


def estimate_pi_tail(n: int, k: int, beta: float, reps: int, root_seed: int,
                     workers: int | None = None) -> TailEstimate:
    """P(pi^(k)(n) >= n e^(-k/beta)) for the floor-map chain x -> floor(x*U),
    iterated k times from x = n (absorbing at 0)."""
    if n < 1 or k < 1 or beta <= 0 or reps < 1:
        raise ValueError("need n >= 1, k >= 1, beta > 0, reps >= 1")
    c = n * math.exp(-k / beta)

    def fill(start, stop, outs):
        out = outs[0]
        for i in range(start, stop):
            g = derive_stream(root_seed, i)
            u = g.random(k)
            x = n
            for j in range(k):
                x = int(x * u[j])
            out[i] = 1.0 if x >= c else 0.0

    (vals,) = _run_replicates(reps, workers, fill)
    p, se = _indicator_stats(vals, reps)
    desc = f"pi^({k})({n}) >= {c:.6g} (beta={beta})"
    return TailEstimate(p, se, reps, root_seed, desc)


def estimate_good_vertices(n: int, beta: float, reps: int, root_seed: int,
                           workers: int | None = None) -> tuple[TailEstimate, TailEstimate]:
    """Good-vertex statistics on floor-map trees.

    A vertex x is good when its ancestor chain satisfies
    chain(j) >= x * e^(-j/beta) for every 1 <= j <= b, b = ceil(beta * ln n).
    Returns the mean count of good vertices in [n/2, n-1] and the probability
    that at least one exists (any such vertex witnesses height >= b).
    """
    if n < 4 or reps < 1:
        raise ValueError("need n >= 4 and reps >= 1")
    if beta <= math.e:
        raise ValueError("beta must exceed e")
    b = upper_height_threshold(n, beta)
    lo = (n + 1) // 2
    decay = np.exp(-np.arange(b + 1) / beta)
    tgrid = np.arange(1, n, dtype=np.float64)

    def fill(start, stop, outs):
        sig, nonz = outs
        for i in range(start, stop):
            g = derive_stream(root_seed, i)
            parents = (tgrid * g.random(n - 1)).astype(np.int64)
            cnt = _kernels.count_good_vertices(parents, lo, b, decay)
            sig[i] = cnt
            nonz[i] = 1.0 if cnt >= 1 else 0.0

    sigs, nonz = _run_replicates(reps, workers, fill, n_outputs=2)
    mean, se = _sample_stats(sigs, reps)
    p, pse = _indicator_stats(nonz, reps)
    mean_est = TailEstimate(mean, se, reps, root_seed,
                            f"mean good-vertex count in [{lo},{n - 1}], depth window {b} (beta={beta})")
    p_est = TailEstimate(p, pse, reps, root_seed,
                         f"P(some good vertex in [{lo},{n - 1}]), depth window {b} (beta={beta})")
    return mean_est, p_est


def is_good_vertex(tree: RecursiveTree, x: int, beta: float, k: int) -> bool:
    """Whether the ancestor chain of x decays no faster than e^(-j/beta) for
    all 1 <= j <= k (k = 0 is vacuously good)."""
    if not 0 <= x < tree.n:
        raise ValueError("vertex out of range")
    if k < 0:
        raise ValueError("k must be >= 0")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    cur = x
    for j in range(1, k + 1):
        if cur > 0:
            cur = int(tree.parents[cur - 1])
        if cur < x * math.exp(-j / beta):
            return False
    return True


def simulate_heights(n: int, reps: int, root_seed: int, generator: str = "uniform",
                     workers: int | None = None) -> np.ndarray:
    """Heights of reps independent trees, one derived stream per replicate."""
    if n < 1 or reps < 1:
        raise ValueError("need n >= 1 and reps >= 1")
    if generator not in ("uniform", "floor", "yule"):
        raise ValueError("generator must be uniform, floor or yule")

    def fill(start, stop, outs):
        out = outs[0]
        parents = np.empty(max(n - 1, 0), dtype=np.int64)
        depths = np.empty(n, dtype=np.int64)
        tgrid = np.arange(1, n, dtype=np.float64)
        for i in range(start, stop):
            g = derive_stream(root_seed, i)
            if generator == "uniform":
                _uniform_parents(n, g, out=parents)
            elif generator == "floor":
                parents[:] = (tgrid * g.random(n - 1)).astype(np.int64)
            else:
                from .tree_core import grow_yule

                tree, _ = grow_yule(n, g)
                parents[:] = tree.parents
            out[i] = _kernels.depths_from_parents(parents, depths)

    (vals,) = _run_replicates(reps, workers, fill)
    return vals.astype(np.int64)
