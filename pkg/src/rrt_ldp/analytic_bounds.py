"""Closed-form tails, rate functions, and special functions for tree heights.

Pure, stateless, thread-safe.  Tail sums run in log space when the direct
terms would underflow; the documented accuracy budget is ~1e-12 relative for
non-degenerate values (float cancellation caps what 1 - x can resolve).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "SandwichBound",
    "RateValues",
    "EXACT_X1_MAX_N",
    "iterated_ln",
    "tower_index",
    "rate_functions",
    "binary_kl",
    "poisson_cdf",
    "poisson_chernoff",
    "gamma_cdf",
    "pi_tail_sandwich",
    "poisson_binomial_x1",
    "poisson_binomial_x1_logpmf",
    "poisson_binomial_x1_log_sf",
    "remark13_inequality",
    "lower_height_threshold",
    "upper_height_threshold",
]

# exact-rational convolution switches to the log-space float DP beyond this
EXACT_X1_MAX_N = 2000


@dataclass(frozen=True)
class SandwichBound:
    """Analytic (lower, upper) probability pair bracketing a target tail."""

    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ValueError("need 0 <= lower <= upper <= 1")


@dataclass(frozen=True)
class RateValues:
    """Upper-tail decay rates: J = e*beta*ln(beta) governs thresholds
    beta*e*ln n, J_sf = beta*(ln(beta) - 1) governs thresholds beta*ln n;
    they satisfy J(beta) = J_sf(e*beta)."""

    J: float
    J_sf: float


def iterated_ln(k: int, x: float) -> float:
    """k-fold natural logarithm; every intermediate argument must stay > 0."""
    if k < 0:
        raise ValueError("k must be >= 0")
    v = float(x)
    for _ in range(k):
        if v <= 0.0:
            raise ValueError(f"iterated log of {x!r} leaves the domain after hitting {v!r}")
        v = math.log(v)
    return v


def tower_index(n: float) -> int:
    """Position of n in the exponential tower a_1 = 1, a_{k+1} = e^{a_k}:
    the least k with a_k <= n < a_{k+1} (n = 1 gives 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = 1
    v = float(n)
    while v >= math.e:
        v = math.log(v)
        k += 1
    return k


def rate_functions(beta: float) -> RateValues:
    """Both upper-tail rate values at beta (callers pick the threshold scale)."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    lb = math.log(beta)
    return RateValues(J=math.e * beta * lb, J_sf=beta * (lb - 1.0))


def binary_kl(gamma: float, p: float) -> float:
    """Binary relative entropy gamma*ln(gamma/p) + (1-gamma)*ln((1-gamma)/(1-p)),
    with the conventions 0*ln 0 = 0 and +inf for p in {0,1} with gamma != p."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p in (0.0, 1.0):
        return 0.0 if gamma == p else math.inf
    out = 0.0
    if gamma > 0.0:
        out += gamma * math.log(gamma / p)
    if gamma < 1.0:
        out += (1.0 - gamma) * math.log((1.0 - gamma) / (1.0 - p))
    return max(out, 0.0)


def poisson_cdf(lam: float, x: float) -> float:
    """P(Poisson(lam) <= x) by exactly rounded summation of log-space terms.

    Terms are evaluated through lgamma, so each carries ~1e-13 relative error
    at worst; fsum adds nothing on top.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if x < 0:
        return 0.0
    kmax = math.floor(x)
    llam = math.log(lam)
    terms = []
    j = 0
    while j <= kmax:
        term = math.exp(-lam + j * llam - math.lgamma(j + 1))
        terms.append(term)
        if j > lam and term < 1e-22:
            break  # remaining mass < 2e-22, invisible next to the ~1 total
        j += 1
    return min(math.fsum(terms), 1.0)


def poisson_chernoff(lam: float, x: float) -> tuple[float, float]:
    """Upper bounds on P(Poisson(lam) > x) for x > lam, in both displayed forms:

        (e^-lam (lam e / x)^x,  exp(-x [ln x - ln lam - 1]))

    The first is tighter by exactly the factor e^-lam.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if x <= lam:
        raise ValueError("the bound needs x > lam")
    expo = -x * (math.log(x) - math.log(lam) - 1.0)
    tight = math.exp(expo - lam) if expo - lam < 709 else math.inf
    loose = math.exp(expo) if expo < 709 else math.inf
    return tight, loose


def gamma_cdf(k: int, z: float) -> float:
    """P(Gamma(k, 1) <= z) for integer shape k >= 1.

    Dual to the Poisson upper tail: P(S_k <= z) = P(Poisson(z) >= k).  Small
    results (k well above z) are summed directly on the upper-tail side so no
    1-x cancellation occurs; otherwise the survival sum 1 - e^-z sum_{j<k}
    z^j/j! runs on a term recurrence.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if z <= 0:
        return 0.0
    if k - 1 > z:
        # tail sum P(Poisson(z) >= k), ascending terms from j = k
        lz = math.log(z)
        terms = []
        j = k
        while True:
            term = math.exp(-z + j * lz - math.lgamma(j + 1))
            terms.append(term)
            if j > z and (term < 1e-22 * terms[0] or term == 0.0):
                break
            j += 1
        return min(math.fsum(terms), 1.0)
    if z < 700:
        term = math.exp(-z)
        surv = term
        for j in range(1, k):
            term *= z / j
            surv += term
        return max(0.0, 1.0 - surv)
    # z huge: survival itself computed in log space
    lz = math.log(z)
    logs = [-z + j * lz - math.lgamma(j + 1) for j in range(k)]
    m = max(logs)
    log_surv = m + math.log(math.fsum(math.exp(v - m) for v in logs))
    return max(0.0, 1.0 - math.exp(log_surv)) if log_surv < 0 else 0.0


def pi_tail_sandwich(n: int, k: int, beta: float) -> SandwichBound:
    """Gamma-tail bracket for P(pi^(k)(n) >= n e^(-k/beta)) where pi is the
    floor-map parent chain:

        P(S_k <= k/b - ln(1 + (k/n) e^{k/b}))  <=  target  <=  P(S_k <= k/b)

    with S_k a sum of k unit exponentials.  A non-positive lower argument
    means the bracketing event is empty, so the lower bound clamps to 0.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    z = k / beta
    arg = z - math.log1p((k / n) * math.exp(z)) if z < 700 else -math.inf
    lower = gamma_cdf(k, arg) if arg > 0 else 0.0
    upper = gamma_cdf(k, z)
    return SandwichBound(lower=lower, upper=upper)


def poisson_binomial_x1(n: int) -> dict[int, Fraction] | dict[int, float]:
    """Law of the root-child count on n vertices: 1 + sum_{j=2}^{n-1} Ber(1/j).

    Exact rationals (integer-scaled convolution) for n <= EXACT_X1_MAX_N;
    beyond that the log-space convolution is exponentiated, so extreme tail
    entries may underflow to 0.0 (use the logpmf variant for tail work).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if n <= EXACT_X1_MAX_N:
        nums = [0, 1]
        den = 1
        for j in range(2, n):
            den *= j
            new = [0] * (len(nums) + 1)
            for v in range(1, len(nums)):
                c = nums[v]
                if c:
                    new[v] += c * (j - 1)
                    new[v + 1] += c
            nums = new
        return {v: Fraction(nums[v], den) for v in range(1, len(nums)) if nums[v]}
    lp = poisson_binomial_x1_logpmf(n)
    return {v: float(math.exp(lp[v])) for v in range(1, n)}


def poisson_binomial_x1_logpmf(n: int) -> np.ndarray:
    """Log pmf of the root-child count; index = value, support 1..n-1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    lp = np.full(n, -np.inf)
    lp[1] = 0.0
    hi = 1
    for j in range(2, n):
        lq = -math.log(j)
        l1 = math.log1p(-1.0 / j)
        shifted = np.concatenate(([-np.inf], lp[1:hi + 1])) + lq
        lp[1:hi + 2] = np.logaddexp(lp[1:hi + 2] + l1, shifted)
        hi += 1
    return lp


def poisson_binomial_x1_log_sf(n: int) -> np.ndarray:
    """log P(root-child count >= t) for t = 0..n-1 (index t)."""
    lp = poisson_binomial_x1_logpmf(n)
    out = np.full(n, -np.inf)
    acc = -np.inf
    for t in range(n - 1, 0, -1):
        acc = np.logaddexp(acc, lp[t])
        out[t] = acc
    out[0] = 0.0
    return out


def remark13_inequality(lam: float) -> bool:
    """Whether (e + lam) * ln(1 + lam/e) > lam / (2e) holds at lam > 0."""
    if lam <= 0:
        raise ValueError("lam must be > 0")
    return (math.e + lam) * math.log1p(lam / math.e) > lam / (2.0 * math.e)


def lower_height_threshold(n: int, alpha: float) -> int:
    """Integer threshold floor(alpha * e * ln n) of the short-tree event."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.floor(alpha * math.e * math.log(n))


def upper_height_threshold(n: int, beta: float) -> int:
    """Integer threshold ceil(beta * ln n) of the tall-tree event."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    return math.ceil(beta * math.log(n))
