"""Compiled kernels for the per-attachment hot loops.

Everything here is deterministic IEEE arithmetic (no fastmath), so results
are bitwise reproducible given the same inputs regardless of threading.
"""

import numpy as np
from numba import njit

_U1 = np.uint64(1)


@njit(cache=True, nogil=True)
def fill_uniform_parents(bits, n, parents, start_t):
    """Fill parents[t-1] with a uniform draw on {0..t-1} for t >= start_t.

    Uses rejection against the next power of two (mask the low bits of a raw
    64-bit word, retry while the masked value is >= t), so the draw is exactly
    uniform.  Returns (next_t, words_used); next_t < n means the word buffer
    ran dry and the caller must top it up.
    """
    pos = 0
    nwords = bits.shape[0]
    t = start_t
    while t < n:
        if t == 1:
            parents[0] = 0
            t += 1
            continue
        mask = np.uint64(t - 1)
        mask |= mask >> _U1
        mask |= mask >> np.uint64(2)
        mask |= mask >> np.uint64(4)
        mask |= mask >> np.uint64(8)
        mask |= mask >> np.uint64(16)
        mask |= mask >> np.uint64(32)
        filled = False
        while pos < nwords:
            v = bits[pos] & mask
            pos += 1
            if v < np.uint64(t):
                parents[t - 1] = np.int64(v)
                filled = True
                break
        if not filled:
            return t, pos
        t += 1
    return t, pos


@njit(cache=True, nogil=True)
def depths_from_parents(parents, depths):
    """Single forward pass (parents precede children); returns the height."""
    n = parents.shape[0] + 1
    depths[0] = 0
    h = np.int64(0)
    for t in range(1, n):
        d = depths[parents[t - 1]] + 1
        depths[t] = d
        if d > h:
            h = d
    return h


@njit(cache=True, nogil=True)
def component_roots(parents, m, comp):
    """comp[x] = first vertex with label < m on the ancestor chain of x."""
    n = parents.shape[0] + 1
    for x in range(n):
        if x < m:
            comp[x] = x
        else:
            comp[x] = comp[parents[x - 1]]


@njit(cache=True, nogil=True)
def tilted_growth(u, theta, counts, pows):
    """Grow the depth profile under the theta**depth attachment tilt.

    One uniform per step selects a depth class with probability proportional
    to counts[d] * theta**d; the new vertex lands one level below.  Returns
    (height, log likelihood ratio of uniform attachment against the tilt).
    counts and pows are caller-provided scratch of length n.
    """
    n = u.shape[0] + 1
    counts[0] = 1
    pows[0] = 1.0
    height = 0
    z = 1.0
    log_theta = np.log(theta)
    loglr = 0.0
    for t in range(1, n):
        r = u[t - 1] * z
        d = 0
        acc = counts[0] * pows[0]
        while r >= acc and d < height:
            d += 1
            acc += counts[d] * pows[d]
        loglr += np.log(z) - np.log(t) - d * log_theta
        nd = d + 1
        if nd > height:
            height = nd
            pows[nd] = pows[nd - 1] * theta
            counts[nd] = 0
        counts[nd] += 1
        z += pows[nd]
    return height, loglr


@njit(cache=True, nogil=True)
def count_good_vertices(parents, lo, b, decay):
    """Count x in [lo, n-1] whose ancestor chain satisfies
    chain(j) >= x * decay[j] for every 1 <= j <= b (chain clamped at root)."""
    n = parents.shape[0] + 1
    cnt = 0
    for x in range(lo, n):
        cur = x
        good = True
        for j in range(1, b + 1):
            if cur > 0:
                cur = parents[cur - 1]
            if cur < x * decay[j]:
                good = False
                break
        if good:
            cnt += 1
    return cnt
