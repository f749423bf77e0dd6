"""Exact combinatorics: height-bounded increasing-tree counts, the exact
height CDF, composition counting, and balanced set-partition counts.

Everything is integer/rational arithmetic; floats only appear at reporting
boundaries, where values are first evaluated with >= 50 significant digits
(large tables produce probabilities far below the double range, and their
negative logs still need ~6 significant digits at magnitude 10^3+).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import NamedTuple, TextIO

import mpmath

from .analytic_bounds import lower_height_threshold

__all__ = [
    "ResourceLimitError",
    "ExactCdfTable",
    "ExactProbability",
    "PartitionScheme",
    "build_cdf_table",
    "brute_force_height_dist",
    "exact_height_cdf",
    "neg_log_height_cdf",
    "omega_alpha",
    "partition_scheme",
    "count_compositions_bounded",
    "composition_count_table",
    "count_balanced_compositions",
    "small_part_count_dist",
    "subtree_tail_product",
    "bell_numbers",
    "write_cdf_csv",
]

MAX_TABLE_N = 2000
MAX_TABLE_K = 128
MAX_BRUTE_FORCE_N = 12
REPORT_DPS = 60  # decimal digits carried before any rounding to double


class ResourceLimitError(RuntimeError):
    """The requested exact computation exceeds the documented size limits."""


@dataclass(frozen=True)
class ExactCdfTable:
    """counts[k][n] = number of increasing trees on n vertices with height <= k.

    Dividing by (n-1)! turns a count into the exact height CDF.  Tables are
    immutable once built and safe to share across threads.
    """

    n_max: int
    k_max: int
    counts: tuple

    def __post_init__(self):
        assert self.counts[0][1] == 1


class ExactProbability(NamedTuple):
    rational: Fraction
    approx: mpmath.mpf


def build_cdf_table(n_max: int, k_max: int) -> ExactCdfTable:
    """Exact table of height-bounded increasing-tree counts.

    A height-<=k tree is the root plus an unordered set of height-<=(k-1)
    subtrees, so the exponential generating functions satisfy T_0(x) = x and
    T_k' = exp(T_{k-1}) with T_k(0) = 0.  On coefficients scaled by n! the
    series exponential E = exp(F) becomes the integer recurrence

        E_m = sum_{j=1}^{m} C(m-1, j-1) * F_j * E_{m-j},   E_0 = 1,

    and the count for n vertices is E_{n-1}.  All arithmetic is exact.
    """
    if n_max < 1 or k_max < 0:
        raise ValueError("need n_max >= 1 and k_max >= 0")
    if n_max > MAX_TABLE_N or k_max > MAX_TABLE_K:
        raise ResourceLimitError(
            f"table limited to n_max <= {MAX_TABLE_N}, k_max <= {MAX_TABLE_K}"
        )
    row0 = [0] * (n_max + 1)
    row0[1] = 1
    rows = [row0]
    for _k in range(1, k_max + 1):
        prev = rows[-1]
        exp_coeffs = [0] * n_max
        exp_coeffs[0] = 1
        for m in range(1, n_max):
            acc = 0
            for j in range(1, m + 1):
                fj = prev[j]
                if fj:
                    acc += comb(m - 1, j - 1) * fj * exp_coeffs[m - j]
            exp_coeffs[m] = acc
        row = [0] * (n_max + 1)
        for n in range(1, n_max + 1):
            row[n] = exp_coeffs[n - 1]
        rows.append(row)
    return ExactCdfTable(n_max, k_max, tuple(tuple(r) for r in rows))


def brute_force_height_dist(n: int) -> dict[int, int]:
    """Height counts over all (n-1)! parent arrays, enumerated depth-first in
    mixed-radix order (radices 1, 2, .., n-1).  Independent oracle for the
    series table."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_BRUTE_FORCE_N:
        raise ResourceLimitError(f"enumeration limited to n <= {MAX_BRUTE_FORCE_N}")
    if n == 1:
        return {0: 1}
    counts = [0] * n
    depths = [0] * n

    def rec(t: int, h: int) -> None:
        if t == n:
            counts[h] += 1
            return
        for p in range(t):
            d = depths[p] + 1
            depths[t] = d
            rec(t + 1, d if d > h else h)

    rec(1, 0)
    return {h: c for h, c in enumerate(counts) if c}


def exact_height_cdf(table: ExactCdfTable, n: int, k: int) -> ExactProbability:
    """P(height <= k) for a uniform random recursive tree on n vertices.

    Returns the exact rational together with a 60-digit float rendering.
    """
    if not (1 <= n <= table.n_max and 0 <= k <= table.k_max):
        raise ValueError("query outside the built table")
    frac = Fraction(table.counts[k][n], factorial(n - 1))
    with mpmath.workdps(REPORT_DPS):
        approx = mpmath.mpf(frac.numerator) / mpmath.mpf(frac.denominator)
    return ExactProbability(frac, approx)


def neg_log_height_cdf(table: ExactCdfTable, n: int, k: int) -> mpmath.mpf:
    """-ln P(height <= k), the exact rational fed to a 60-digit logarithm."""
    if not (1 <= n <= table.n_max and 0 <= k <= table.k_max):
        raise ValueError("query outside the built table")
    a = table.counts[k][n]
    if a == 0:
        return mpmath.inf
    with mpmath.workdps(REPORT_DPS):
        return mpmath.log(mpmath.mpf(factorial(n - 1))) - mpmath.log(mpmath.mpf(a))


def omega_alpha(table: ExactCdfTable, n: int, alpha: float) -> float:
    """Lower-tail decay rate at size n:

        -ln P(height <= floor(alpha*e*ln n))  /  [n^(1-alpha) * (ln n)^(-3/(2e))].

    The height is integer valued, so the event is evaluated at the integer
    threshold floor(alpha*e*ln n) (natural log).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    k = lower_height_threshold(n, alpha)
    if n > table.n_max or k > table.k_max:
        raise ValueError("threshold exceeds the built table")
    neg = neg_log_height_cdf(table, n, k)
    if neg == mpmath.inf:
        return math.inf
    with mpmath.workdps(REPORT_DPS):
        ln_n = mpmath.log(n)
        scale = mpmath.power(n, 1.0 - alpha) * mpmath.power(ln_n, -3.0 / (2.0 * mpmath.e))
        return float(neg / scale)


@dataclass(frozen=True)
class PartitionScheme:
    """Balanced partitions of an N-element set: d-1 blocks of size s+1 plus
    one remainder block of size 1+s+r, with s = floor(ln N), d = floor(N/(s+1))
    and r = N - d(s+1); count is the number of such set partitions."""

    N: int
    s: int
    d: int
    r: int
    count: int


def partition_scheme(N: int) -> PartitionScheme:
    """Block parameters and the exact count of qualifying set partitions."""
    if N < 3:
        raise ValueError("need N >= 3 so the block-size parameter is >= 1")
    s = math.floor(math.log(N))
    d = N // (s + 1)
    r = N - d * (s + 1)
    if r >= 1:
        count = factorial(N) // (
            factorial(s + 1) ** (d - 1) * factorial(1 + s + r) * factorial(d - 1)
        )
    else:
        count = factorial(N) // (factorial(s + 1) ** d * factorial(d))
    return PartitionScheme(N, s, d, r, count)


def composition_count_table(parts: int, low: int, high: int, max_total: int) -> list[int]:
    """ways[t] = number of compositions of t into `parts` parts, each part in
    [low, high].  Sliding-window prefix sums keep the DP at O(parts * max_total)
    exact-integer operations."""
    if parts < 0 or low < 1 or high < low or max_total < 0:
        raise ValueError("invalid composition bounds")
    ways = [0] * (max_total + 1)
    ways[0] = 1
    for _ in range(parts):
        prefix = [0] * (max_total + 2)
        for t in range(max_total + 1):
            prefix[t + 1] = prefix[t] + ways[t]
        new = [0] * (max_total + 1)
        for t in range(low, max_total + 1):
            a = t - high
            new[t] = prefix[t - low + 1] - prefix[a if a > 0 else 0]
        ways = new
    return ways


def count_compositions_bounded(n: int, m: int, low: int, high: int) -> int:
    """Number of compositions (n_1, .., n_m) of n with every part in [low, high].

    With low=1, high=n this is C(n-1, m-1).  Infeasible bounds give 0.
    """
    if m < 1 or low < 1 or high < low or n < 0:
        raise ValueError("invalid arguments")
    if m * low > n or m * high < n:
        return 0
    return composition_count_table(m, low, min(high, n), n)[n]


def count_balanced_compositions(n: int, m: int) -> int:
    """Compositions of n into m parts whose first m-1 parts lie in the integer
    interval [n/(2m), 3n/(2m)] and whose last part is in [1, 2n/m]."""
    if m < 2 or n < m:
        raise ValueError("need n >= m >= 2")
    low = -((-n) // (2 * m))
    high = (3 * n) // (2 * m)
    last_hi = min((2 * n) // m, n - 1)
    if high < low or last_hi < 1:
        return 0
    tbl = composition_count_table(m - 1, low, high, n - 1)
    return sum(tbl[n - last] for last in range(1, last_hi + 1))


def small_part_count_dist(n: int, m: int, cap: int) -> dict[int, Fraction]:
    """Exact law of #{j : n_j < cap} under the uniform composition of n into m
    positive parts.  By exchangeability the mean is m * P(one part < cap)."""
    if m < 1 or n < m or cap < 1:
        raise ValueError("need n >= m >= 1 and cap >= 1")
    # dp[c][t]: placed parts sum to t with c of them below cap
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    dp[0][0] = 1
    for part in range(1, m + 1):
        new = [[0] * (n + 1) for _ in range(m + 1)]
        for c in range(part):
            row = dp[c]
            if not any(row):
                continue
            prefix = [0] * (n + 2)
            for t in range(n + 1):
                prefix[t + 1] = prefix[t] + row[t]
            small_row = new[c + 1]
            big_row = new[c]
            for t in range(1, n + 1):
                lo_small = t - cap + 1
                small_row[t] += prefix[t] - prefix[lo_small if lo_small > 0 else 0]
                if t >= cap:
                    big_row[t] += prefix[t - cap + 1]
        dp = new
    total = sum(dp[c][n] for c in range(m + 1))
    assert total == comb(n - 1, m - 1)
    return {c: Fraction(dp[c][n], total) for c in range(m + 1) if dp[c][n]}


def subtree_tail_product(m: int, n: int, k: int) -> Fraction:
    """P(first component size >= 1+k) under the uniform m-part composition of n,
    as the exact product prod_{j=1}^{m-1} (1 - k/(n-j)); equals
    C(n-k-1, m-1) / C(n-1, m-1), and 0 once k + m > n."""
    if m < 1 or n < m or k < 0:
        raise ValueError("need n >= m >= 1 and k >= 0")
    if k + m > n:
        return Fraction(0)
    p = Fraction(1)
    for j in range(1, m):
        p *= Fraction(n - j - k, n - j)
    return p


def bell_numbers(count: int) -> list[int]:
    """Bell numbers B_0 .. B_{count-1} from the Bell triangle."""
    if count < 1:
        raise ValueError("count must be >= 1")
    bells = [1]
    row = [1]
    while len(bells) < count:
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
        bells.append(row[0])
    return bells


def write_cdf_csv(table: ExactCdfTable, out: TextIO) -> None:
    """Emit the full table as CSV: n,k,A_k_n,prob_num,prob_den,prob_float.

    Counts and the rational parts are decimal digit strings; prob_float is a
    17-significant-digit rendering computed at 60 digits first (probabilities
    below the double range keep their magnitude instead of flushing to 0).
    """
    w = csv.writer(out)
    w.writerow(["n", "k", "A_k_n", "prob_num", "prob_den", "prob_float"])
    for n in range(1, table.n_max + 1):
        den = factorial(n - 1)
        for k in range(table.k_max + 1):
            a = table.counts[k][n]
            frac = Fraction(a, den)
            with mpmath.workdps(REPORT_DPS):
                approx = mpmath.mpf(frac.numerator) / mpmath.mpf(frac.denominator)
                rendered = mpmath.nstr(approx, 17)
            w.writerow([n, k, str(a), str(frac.numerator), str(frac.denominator), rendered])
