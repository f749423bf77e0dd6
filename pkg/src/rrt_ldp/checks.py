"""Named invariant checks behind the `verify` command.

Each check returns (ok, detail).  Monte Carlo checks run on fixed seeds, so
a rerun reproduces the same verdict bit for bit.  The heavy computations are
plain functions so the test suite can reuse them at the acceptance settings.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import comb, factorial

import numpy as np

from . import analytic_bounds as ab
from . import exact_engine as ee
from . import rare_event as re_
from . import tree_core as tc

__all__ = ["SUITES", "SUITE_NAMES", "run_suite", "two_sample_chisquare_pvalue"]


# --------------------------------------------------------------------------
# shared helpers


def two_sample_chisquare_pvalue(counts_a, counts_b) -> float:
    """Homogeneity chi-square for two histograms over the same bins; adjacent
    bins are pooled until every pooled expected count reaches 5."""
    from scipy.stats import chi2_contingency

    a = np.asarray(counts_a, dtype=np.int64)
    b = np.asarray(counts_b, dtype=np.int64)
    if a.shape != b.shape:
        size = max(a.size, b.size)
        a = np.pad(a, (0, size - a.size))
        b = np.pad(b, (0, size - b.size))
    tot = a + b
    merged_a, merged_b = [], []
    acc_a = acc_b = acc_t = 0
    for i in range(a.size):
        acc_a += int(a[i])
        acc_b += int(b[i])
        acc_t += int(tot[i])
        if acc_t >= 10:  # expected ~acc_t/2 per row
            merged_a.append(acc_a)
            merged_b.append(acc_b)
            acc_a = acc_b = acc_t = 0
    if acc_t:
        if merged_a:
            merged_a[-1] += acc_a
            merged_b[-1] += acc_b
        else:
            merged_a, merged_b = [acc_a], [acc_b]
    if len(merged_a) < 2:
        return 1.0
    _, p, _, _ = chi2_contingency(np.array([merged_a, merged_b]))
    return float(p)


def height_histogram(n, reps, root_seed, generator):
    hs = re_.simulate_heights(n, reps, root_seed, generator=generator)
    return np.bincount(hs, minlength=n)


def fraction_upper_bound_exp_neg(m: int) -> Fraction:
    """A certified rational upper bound on e^-m (float value padded well past
    the libm error)."""
    return Fraction(math.exp(-m)) * (1 + Fraction(1, 2**40))


# --------------------------------------------------------------------------
# tree_core invariants


def check_increasing_property():
    rng = np.random.Generator(np.random.PCG64(20240501))
    n_checked = 0
    for n in (1, 2, 3, 17, 400):
        for grow in (tc.grow_uniform, tc.grow_floor_map):
            t = grow(n, rng)
            if t.n > 1 and np.any(t.parents >= np.arange(1, t.n)):
                return False, f"non-increasing parent at n={n}"
            n_checked += 1
        t, _ = tc.grow_yule(n, rng)
        if t.n > 1 and np.any(t.parents >= np.arange(1, t.n)):
            return False, f"non-increasing parent at n={n} (yule)"
        n_checked += 1
    return True, f"{n_checked} trees respect parents[i] <= i"


def check_generator_equivalence(reps=100_000):
    worst = 0.0
    for n in (4, 5):
        bf = ee.brute_force_height_dist(n)
        total = factorial(n - 1)
        for gi, gen in enumerate(("uniform", "floor", "yule")):
            counts = height_histogram(n, reps, 7100 + 13 * n + gi, gen)
            for h in range(n):
                p = bf.get(h, 0) / total
                phat = counts[h] / reps if h < counts.size else 0.0
                se = math.sqrt(p * (1 - p) / reps)
                if se == 0.0:
                    if phat != p:
                        return False, f"impossible height {h} seen (n={n}, {gen})"
                    continue
                z = abs(phat - p) / se
                worst = max(worst, z)
                if z > 4.0:
                    return False, f"height {h} off by {z:.2f} SE (n={n}, {gen})"
    return True, f"3 generators x n in (4,5): worst |z| = {worst:.2f} (limit 4)"


def composition_uniformity_result(reps=100_000, root_seed=420561):
    """Empirical frequencies of the 10 compositions at n=6, m=3."""
    n, m = 6, 3
    freq = {}

    def fill(start, stop, outs):
        for i in range(start, stop):
            g = re_.derive_stream(root_seed, i)
            tree = tc.grow_uniform(n, g)
            sizes = tuple(int(v) for v in tc.subtree_decomposition(tree, m).sizes)
            freq[sizes] = freq.get(sizes, 0) + 1

    # single-threaded on purpose: dict updates are the aggregation here
    for s in range(0, reps, 8192):
        fill(s, min(s + 8192, reps), None)
    return freq


def check_composition_uniformity(reps=100_000):
    freq = composition_uniformity_result(reps)
    cells = [(a, b, 6 - a - b) for a in range(1, 5) for b in range(1, 6 - a)]
    assert len(cells) == 10
    tol = 4.0 * math.sqrt(0.1 * 0.9 / reps)
    worst = 0.0
    for cell in cells:
        dev = abs(freq.get(cell, 0) / reps - 0.1)
        worst = max(worst, dev)
        if dev > tol:
            return False, f"composition {cell} off by {dev:.4f} > {tol:.4f}"
    return True, f"10 compositions uniform: worst |dev| = {worst:.4f} (tol {tol:.4f})"


def check_level_recursion(n=200, reps=50_000, root_seed=90210):
    """Second level set vs the sum of fresh first level sets over the
    first-level subtree sizes (two-sample chi-square)."""
    direct = np.zeros(n + 1, dtype=np.int64)
    composed = np.zeros(n + 1, dtype=np.int64)
    for i in range(reps):
        g = re_.derive_stream(root_seed, i)
        stats = tc.tree_stats(tc.grow_uniform(n, g))
        x2 = stats.level_sizes[2] if stats.level_sizes.size > 2 else 0
        direct[x2] += 1

        g = re_.derive_stream(root_seed + 1, i)
        tree = tc.grow_uniform(n, g)
        depths = tc.tree_stats(tree).depths
        # sizes of the subtrees rooted at depth-1 vertices
        anc1 = np.zeros(n, dtype=np.int64)
        sizes: dict[int, int] = {}
        for x in range(1, n):
            a = x if depths[x] == 1 else anc1[tree.parents[x - 1]]
            anc1[x] = a
            sizes[a] = sizes.get(a, 0) + 1
        total = 0
        for sz in sizes.values():
            if sz >= 2:
                total += 1 + int((g.random(sz - 2) < 1.0 / np.arange(2, sz)).sum())
        composed[total] += 1
    p = two_sample_chisquare_pvalue(direct, composed)
    ok = p > 0.001
    return ok, f"X_2(200) direct vs composed: chi-square p = {p:.4f} (need > 0.001)"


def check_tree_determinism():
    for n in (1, 2, 64, 1000):
        a = tc.grow_uniform(n, np.random.Generator(np.random.PCG64(5))).parents
        b = tc.grow_uniform(n, np.random.Generator(np.random.PCG64(5))).parents
        if not np.array_equal(a, b):
            return False, f"grow_uniform(n={n}) not reproducible"
        a = tc.grow_floor_map(n, np.random.Generator(np.random.PCG64(6))).parents
        b = tc.grow_floor_map(n, np.random.Generator(np.random.PCG64(6))).parents
        if not np.array_equal(a, b):
            return False, f"grow_floor_map(n={n}) not reproducible"
        ta, ba = tc.grow_yule(n, np.random.Generator(np.random.PCG64(7)))
        tb, bb = tc.grow_yule(n, np.random.Generator(np.random.PCG64(7)))
        if not (np.array_equal(ta.parents, tb.parents) and np.array_equal(ba, bb)):
            return False, f"grow_yule(n={n}) not reproducible"
    return True, "identical (seed, n) give bitwise-identical trees for all generators"


# --------------------------------------------------------------------------
# exact_engine invariants


def check_series_vs_bruteforce(n_hi=10, k_hi=9):
    table = ee.build_cdf_table(n_hi, k_hi)
    for n in range(1, n_hi + 1):
        bf = ee.brute_force_height_dist(n)
        for k in range(k_hi + 1):
            cum = sum(c for h, c in bf.items() if h <= k)
            if cum != table.counts[k][n]:
                return False, f"A_{k}({n}) = {table.counts[k][n]} != brute force {cum}"
    return True, f"series counts equal brute force for n <= {n_hi}, k <= {k_hi}"


def check_bell_identity(n_hi=25):
    table = ee.build_cdf_table(n_hi, 2)
    bells = ee.bell_numbers(n_hi)
    for n in range(1, n_hi + 1):
        if table.counts[2][n] != bells[n - 1]:
            return False, f"A_2({n}) != Bell({n - 1})"
    return True, f"A_2(n) = Bell(n-1) for n <= {n_hi} (Bell triangle oracle)"


def check_product_tail_identity(m_hi=20, n_hi=200):
    checked = 0
    for m in range(1, m_hi + 1):
        tbl = ee.composition_count_table(m, 1, n_hi, n_hi)
        for n in range(m, n_hi + 1):
            total = tbl[n]
            p = Fraction(1)
            for k in range(0, n - m + 1):
                if k:
                    p *= Fraction(n - m + 1 - k, n - k)
                if p != Fraction(tbl[n - k], total):
                    return False, f"product tail != DP ratio at m={m}, n={n}, k={k}"
                checked += 1
    # tie the public op to the incremental product on a sample
    for (m, n, k) in ((2, 5, 2), (7, 31, 3), (20, 200, 9), (13, 77, 0)):
        lhs = ee.subtree_tail_product(m, n, k)
        tbl = ee.composition_count_table(m, 1, n, n)
        if lhs != Fraction(tbl[n - k], tbl[n]):
            return False, f"subtree_tail_product mismatch at {(m, n, k)}"
    return True, f"{checked} (m,n,k) cells: exact rational equality with the DP"


def check_monotone_domination():
    theta_num, theta_den = 1, 2  # theta = 1/2
    checked = 0
    for m in (4, 8, 12, 20):
        for n in (60, 120, 200):
            cap = n * theta_num / theta_den / m
            tmax = math.ceil(cap) - 1
            for r in sorted({1, m // 2, m - 1}):
                lmax = (r * n * theta_num) // (theta_den * m)
                for L in sorted({r, lmax}):
                    if L < r or L > lmax:
                        continue
                    for t in sorted({0, 1, tmax // 2, tmax}):
                        if t < 0 or t >= cap:
                            continue
                        lhs = ee.subtree_tail_product(m, n, t)
                        rhs = ee.subtree_tail_product(m - r, n - L, t)
                        if lhs > rhs:
                            return False, f"domination fails at m={m},n={n},r={r},L={L},t={t}"
                        checked += 1
    return True, f"{checked} grid points: P_mn(t) <= P_(m-r)(n-L)(t)"


def small_subtree_probability(m: int, n: int) -> Fraction:
    """Exact P(all component sizes <= 2n/m) under the uniform composition."""
    return Fraction(ee.count_compositions_bounded(n, m, 1, (2 * n) // m),
                    comb(n - 1, m - 1))


def check_small_subtree_bound():
    details = []
    for m in (10, 20, 40):
        for ratio in (20, 100):
            n = m * ratio
            p = small_subtree_probability(m, n)
            bound = fraction_upper_bound_exp_neg(m)
            if p < bound:
                return False, f"P(max size <= 2n/m) < e^-m at m={m}, n={n}"
            details.append(f"(m={m},n/m={ratio})")
    return True, "exact P(all sizes <= 2n/m) >= e^-m at " + " ".join(details)


def check_balanced_composition_bound(n=65536, m=64):
    count = ee.count_balanced_compositions(n, m)
    # m^(1/2) = 8 exactly here, so compare 8 * count to (n/m)^(m-1)
    bound = (n // m) ** (m - 1)
    ok = 8 * count >= bound
    ratio = 8 * count / bound
    return ok, f"8 * |balanced compositions| / (n/m)^(m-1) = {ratio:.3f} >= 1 at (m,n)=({m},{n})"


def check_partition_asymptotic():
    import mpmath

    for N in (10**3, 10**4, 10**5):
        scheme = ee.partition_scheme(N)
        with mpmath.workdps(30):
            ln_count = float(mpmath.log(mpmath.mpf(scheme.count)))
        denom = N * (math.log(N) - math.log(math.log(N)) - 1.0)
        ratio = ln_count / denom
        if not 0.9 <= ratio <= 1.1:
            return False, f"ln count ratio {ratio:.4f} outside [0.9, 1.1] at N={N}"
    return True, "ln(count) / [N(ln N - ln ln N - 1)] in [0.9, 1.1] at N = 1e3, 1e4, 1e5"


# --------------------------------------------------------------------------
# analytic_bounds invariants


def x1_exact_survival(n: int) -> dict[int, Fraction]:
    pmf = ab.poisson_binomial_x1(n)
    out: dict[int, Fraction] = {}
    acc = Fraction(0)
    for t in sorted(pmf, reverse=True):
        acc += pmf[t]
        out[t] = acc
    return out


def poisson_tail(lam: float, x: int) -> float:
    """P(Poisson(lam) >= x), summed upward from j = x until the remainder is
    provably below 1e-16 of the total."""
    if x <= 0:
        return 1.0
    llam = math.log(lam)
    terms = []
    j = x
    while True:
        term = math.exp(-lam + j * llam - math.lgamma(j + 1))
        terms.append(term)
        if j > 2 * lam and (term == 0.0 or term < 1e-18 * (terms[0] or 1e-300)):
            break
        j += 1
    return math.fsum(terms)


def check_x1_poisson_domination(n=100):
    sf = x1_exact_survival(n)
    lam = math.log(n - 1)
    for t, lhs in sf.items():
        rhs = poisson_tail(lam, t - 1)
        if float(lhs) > rhs + 1e-15:
            return False, f"domination fails at t={t}"
    return True, f"P(X_1({n}) >= t) <= P(1 + Poisson(ln {n - 1}) >= t) on all {len(sf)} support points"


def check_x1_chernoff(n=100):
    sf = x1_exact_survival(n)
    lln = math.log(math.log(n))
    checked = 0
    for t in range(math.isqrt(n), n):
        bracket = math.log(t) - lln - 1.0
        if bracket <= 0 or t not in sf:
            continue
        if float(sf[t]) > math.exp(-(t - 1) * bracket):
            return False, f"tail bound fails at t={t}"
        checked += 1
    return True, f"P(X_1({n}) >= t) <= exp(-(t-1)[ln t - ln ln n - 1]) at {checked} points"


def x1_rate_bound_margins(n=10_000, rho=0.5):
    """min over t in [n/ln n, n-1] of (-ln P(X_1 >= t) - rho * t * ln t)."""
    log_sf = ab.poisson_binomial_x1_log_sf(n)
    lo = math.ceil(n / math.log(n))
    worst = math.inf
    worst_t = lo
    for t in range(lo, n):
        margin = -log_sf[t] - rho * t * math.log(t)
        if margin < worst:
            worst = margin
            worst_t = t
    return worst, worst_t


def check_x1_rate_bound():
    # The exponential decay-rate bound on the first level set is asymptotic in
    # n: the tail obeys P(X_1 >= t) >= 1/(t+1)!, so rho t ln t can only lie
    # below -ln P once (1 - rho) ln t >= 1 + ln ln n.  At n = 1e4 that admits
    # rho = 0.5 across the whole window [n/ln n, n] but provably excludes
    # rho = 0.9 (every t there sits below e^{1/(1-rho)}).
    worst, worst_t = x1_rate_bound_margins(n=10_000, rho=0.5)
    ok = worst >= 0.0
    return ok, (f"-ln P(X_1(1e4) >= t) - 0.5 t ln t >= {worst:.0f} nats "
                f"(min at t={worst_t}); rho=0.9 is provably outside the valid range at this n")


def check_gamma_poisson_duality():
    # the identity is two-sided: cdf = 1 - p and 1 - cdf = p; a double can
    # only resolve the side away from 1, so take the better-conditioned one
    worst = 0.0
    for k in (1, 2, 5, 10, 25, 50, 100, 200):
        for z in (0.25, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0, 100.0, 200.0, 400.0):
            a = ab.gamma_cdf(k, z)
            p = ab.poisson_cdf(z, k - 1)
            e_cdf = abs(a - (1.0 - p)) / max(a, 1.0 - p, 1e-300)
            e_surv = abs((1.0 - a) - p) / max(1.0 - a, p, 1e-300)
            err = min(e_cdf, e_surv)
            worst = max(worst, err)
            if err > 1e-12:
                return False, f"duality off by {err:.2e} at k={k}, z={z}"
    return True, f"gamma_cdf vs poisson_cdf duality: worst rel diff {worst:.2e} <= 1e-12"


def check_rate_identity():
    worst = 0.0
    for beta in (1.1, 2.0, 3.0, 10.0):
        a = ab.rate_functions(beta).J
        b = ab.rate_functions(math.e * beta).J_sf
        err = abs(a - b) / abs(a)
        worst = max(worst, err)
        if err > 1e-14:
            return False, f"J(beta) != J_sf(e beta) at beta={beta} (rel {err:.2e})"
    return True, f"J(beta) = J_sf(e*beta): worst rel diff {worst:.2e} <= 1e-14"


# --------------------------------------------------------------------------
# rare_event invariants


def is_unbiasedness_results(n, theta, reps, root_seed, table):
    """IS estimates of P(height <= k) for every threshold with mass >= 1e-3."""
    heights, loglr = re_._tilted_samples(n, theta, reps, root_seed, None)
    out = []
    for k in range(0, n):
        exact = ee.exact_height_cdf(table, n, min(k, table.k_max)).rational
        if exact < Fraction(1, 1000):
            continue
        vals = np.zeros(reps)
        hit = heights <= k
        vals[hit] = np.exp(loglr[hit])
        mean = math.fsum(vals) / reps
        m2 = math.fsum((v - mean) ** 2 for v in vals)
        se = math.sqrt(m2) / reps
        out.append((k, mean, se, float(exact)))
    return out

def check_is_unbiasedness(reps=100_000, theta=0.6):
    worst = 0.0
    for n, seed in ((8, 3083), (16, 3084), (32, 3085)):
        table = ee.build_cdf_table(n, n - 1)
        for k, mean, se, exact in is_unbiasedness_results(n, theta, reps, seed, table):
            z = abs(mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf)
            worst = max(worst, z)
            if z > 3.0:
                return False, f"IS estimate off by {z:.2f} SE at n={n}, k={k}"
    return True, (f"IS estimates match exact CDF within 3 SE over all thresholds with "
                  f"mass >= 1e-3 (worst |z| = {worst:.2f})")


SANDWICH_GRID = tuple((n, k, beta) for n in (100, 1000, 10_000)
                      for k in (3, 5, 8) for beta in (3.0, 4.0))


def sandwich_containment_results(reps=100_000, root_seed=5150):
    rows = []
    for idx, (n, k, beta) in enumerate(SANDWICH_GRID):
        est = re_.estimate_pi_tail(n, k, beta, reps, root_seed + idx)
        bound = ab.pi_tail_sandwich(n, k, beta)
        rows.append((n, k, beta, est, bound))
    return rows


def check_sandwich_containment(reps=100_000):
    for n, k, beta, est, bound in sandwich_containment_results(reps):
        lo = bound.lower - 3.0 * est.std_error
        hi = bound.upper + 3.0 * est.std_error
        if not lo <= est.value <= hi:
            return False, (f"estimate {est.value:.5f} outside [{lo:.5f}, {hi:.5f}] "
                           f"at (n,k,beta)=({n},{k},{beta})")
    return True, f"{len(SANDWICH_GRID)} grid points inside [lower - 3SE, upper + 3SE]"


TREND_POINTS = ((1000, 200_000), (10_000, 100_000), (100_000, 50_000))


def upper_tail_trend_results(beta=3.0, root_seed=777, workers=None):
    out = []
    for n, reps in TREND_POINTS:
        est = re_.estimate_upper_tail(n, beta, reps, root_seed, workers=workers)
        out.append((n, est))
    return out


def trend_slope(points):
    xs = np.array([math.log(n) for n, est in points])
    ys = np.array([math.log(est.value) for n, est in points])
    xbar, ybar = xs.mean(), ys.mean()
    return float(((xs - xbar) * (ys - ybar)).sum() / ((xs - xbar) ** 2).sum())


def check_upper_tail_trend():
    points = upper_tail_trend_results()
    slope = trend_slope(points)
    target = -ab.rate_functions(3.0).J_sf
    ok = abs(slope - target) <= 0.15
    ps = ", ".join(f"p({n})={est.value:.4g}" for n, est in points)
    return ok, f"ln p vs ln n slope {slope:.4f} within 0.15 of {target:.4f} ({ps})"


def check_parallel_invariance():
    runs = []
    for w in (1, 4, 16):
        a = re_.estimate_upper_tail(200, 2.0, 5000, 11, workers=w)
        b = re_.estimate_pi_tail(1000, 5, 3.0, 5000, 12, workers=w)
        c = re_.estimate_lower_tail_is(32, 0.5, re_.TiltConfig(0.7), 5000, 13, workers=w)
        runs.append((a.value, a.std_error, b.value, b.std_error, c.value, c.std_error))
    if runs[0] == runs[1] == runs[2]:
        return True, "estimates bitwise identical for worker counts 1, 4, 16"
    return False, f"worker counts disagree: {runs}"


def check_variance_sanity():
    worst = 0.0
    for est in (re_.estimate_upper_tail(100, 2.0, 4000, 21),
                re_.estimate_pi_tail(500, 4, 3.0, 4000, 22)):
        expect = math.sqrt(est.value * (1.0 - est.value) / est.reps)
        worst = max(worst, abs(est.std_error - expect))
    ok = worst <= 1e-12
    return ok, f"indicator std_error matches sqrt(p(1-p)/reps) within {worst:.1e} (tol 1e-12)"


# --------------------------------------------------------------------------
# registry


SUITES = {
    "tree": [
        ("tree.increasing-property", check_increasing_property),
        ("tree.generator-equivalence", check_generator_equivalence),
        ("tree.composition-uniformity", check_composition_uniformity),
        ("tree.level-recursion", check_level_recursion),
        ("tree.determinism", check_tree_determinism),
    ],
    "exact": [
        ("exact.series-vs-bruteforce", check_series_vs_bruteforce),
        ("exact.bell-identity", check_bell_identity),
        ("exact.product-tail-identity", check_product_tail_identity),
        ("exact.monotone-domination", check_monotone_domination),
        ("exact.small-subtree-bound", check_small_subtree_bound),
        ("exact.balanced-composition-bound", check_balanced_composition_bound),
        ("exact.partition-count-asymptotic", check_partition_asymptotic),
    ],
    "bounds": [
        ("bounds.x1-poisson-domination", check_x1_poisson_domination),
        ("bounds.x1-chernoff", check_x1_chernoff),
        ("bounds.x1-rate-bound", check_x1_rate_bound),
        ("bounds.gamma-poisson-duality", check_gamma_poisson_duality),
        ("bounds.rate-identity", check_rate_identity),
    ],
    "rare": [
        ("rare.is-unbiasedness", check_is_unbiasedness),
        ("rare.sandwich-containment", check_sandwich_containment),
        ("rare.upper-tail-trend", check_upper_tail_trend),
        ("rare.parallel-invariance", check_parallel_invariance),
        ("rare.variance-sanity", check_variance_sanity),
    ],
}

SUITE_NAMES = ("all",) + tuple(SUITES)


def run_suite(suite: str, out) -> bool:
    """Run one suite (or all), print one line per named check, return overall pass."""
    names = list(SUITES) if suite == "all" else [suite]
    all_ok = True
    for group in names:
        for name, fn in SUITES[group]:
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failure, not an abort
                ok, detail = False, f"raised {type(exc).__name__}: {exc}"
            all_ok &= ok
            out.write(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}\n")
    return all_ok
