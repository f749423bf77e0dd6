import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrt_ldp import (
    SandwichBound,
    binary_kl,
    gamma_cdf,
    iterated_ln,
    lower_height_threshold,
    pi_tail_sandwich,
    poisson_binomial_x1,
    poisson_cdf,
    poisson_chernoff,
    rate_functions,
    remark13_inequality,
    tower_index,
    upper_height_threshold,
)
from rrt_ldp.analytic_bounds import (
    poisson_binomial_x1_log_sf,
    poisson_binomial_x1_logpmf,
)


class TestIteratedLnAndTower:
    def test_double_log(self):
        assert iterated_ln(2, math.exp(math.e)) == pytest.approx(1.0)

    def test_zero_applications(self):
        assert iterated_ln(0, 0.125) == 0.125

    def test_domain_error(self):
        with pytest.raises(ValueError):
            iterated_ln(2, 1.0)  # ln 1 = 0, second application fails

    def test_tower_small_values(self):
        assert tower_index(1) == 1
        assert tower_index(2) == 1
        assert tower_index(3) == 2
        assert tower_index(20) == 3

    def test_tower_boundaries(self):
        a3 = math.exp(math.e)
        assert tower_index(a3 - 0.01) == 2
        assert tower_index(a3 + 0.01) == 3
        assert tower_index(10**9) == 4


class TestRateFunctions:
    def test_no_rate_at_one(self):
        assert rate_functions(1.0).J == 0.0

    def test_no_rate_at_e(self):
        assert rate_functions(math.e).J_sf == pytest.approx(0.0, abs=1e-15)

    def test_beta_three(self):
        assert rate_functions(3.0).J_sf == pytest.approx(3 * (math.log(3) - 1), rel=1e-15)
        assert rate_functions(3.0).J_sf == pytest.approx(0.29583686600432935)

    @given(st.floats(1.01, 50.0))
    @settings(max_examples=60, deadline=None)
    def test_scale_identity(self, beta):
        assert rate_functions(beta).J == pytest.approx(
            rate_functions(math.e * beta).J_sf, rel=1e-13
        )


class TestBinaryKl:
    def test_zero_at_equal(self):
        for p in (0.1, 0.5, 0.9):
            assert binary_kl(p, p) == 0.0

    def test_boundary_convention(self):
        assert binary_kl(1.0, 0.25) == pytest.approx(math.log(4))
        assert binary_kl(0.0, 0.25) == pytest.approx(math.log(4 / 3))

    def test_half_vs_quarter(self):
        assert binary_kl(0.5, 0.25) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3))
        assert binary_kl(0.5, 0.25) == pytest.approx(0.14384, abs=1e-5)

    def test_degenerate_p(self):
        assert binary_kl(0.5, 0.0) == math.inf
        assert binary_kl(1.0, 1.0) == 0.0

    @given(st.floats(0, 1), st.floats(0.01, 0.99))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative(self, gamma, p):
        assert binary_kl(gamma, p) >= 0.0


class TestPoisson:
    def test_survival_at_one(self):
        for lam in (0.3, 1.0, 4.0):
            assert 1 - poisson_cdf(lam, 0) == pytest.approx(1 - math.exp(-lam), rel=1e-14)

    def test_chernoff_first_form(self):
        tight, loose = poisson_chernoff(1.0, 2.0)
        assert tight == pytest.approx(math.e / 4, rel=1e-12)
        true_tail = 1 - poisson_cdf(1.0, 2)
        assert true_tail == pytest.approx(1 - 2.5 * math.exp(-1), rel=1e-12)
        assert true_tail == pytest.approx(0.0803, abs=2e-4)
        assert true_tail <= tight

    def test_second_form_dominates_first(self):
        for lam in (0.5, 1.0, 3.0, 10.0, 40.0):
            for mult in (1.3, 2.0, 5.0):
                tight, loose = poisson_chernoff(lam, mult * lam)
                assert loose >= tight
                assert loose == pytest.approx(tight * math.exp(lam), rel=1e-12)

    def test_bound_requires_x_above_lam(self):
        with pytest.raises(ValueError):
            poisson_chernoff(2.0, 2.0)

    def test_cdf_against_mpmath(self):
        for lam in (0.7, 5.0, 60.0):
            for x in (0, 3, 20, 80):
                with mpmath.workdps(40):
                    expected = float(
                        mpmath.exp(-lam) * mpmath.nsum(
                            lambda j: mpmath.mpf(lam) ** j / mpmath.factorial(j), [0, x]
                        )
                    )
                assert poisson_cdf(lam, x) == pytest.approx(expected, rel=1e-12, abs=1e-300)


class TestGammaCdf:
    def test_exponential_case(self):
        for z in (0.1, 1.0, 5.0):
            assert gamma_cdf(1, z) == pytest.approx(1 - math.exp(-z), rel=1e-14)

    def test_shape_two(self):
        assert gamma_cdf(2, 1.0) == pytest.approx(1 - 2 * math.exp(-1), rel=1e-13)
        assert gamma_cdf(2, 1.0) == pytest.approx(0.26424, abs=1e-5)

    def test_against_mpmath_regularized(self):
        for k in (1, 3, 10, 60, 200):
            for z in (0.5, 4.0, 30.0, 120.0, 400.0):
                with mpmath.workdps(40):
                    expected = float(mpmath.gammainc(k, 0, z, regularized=True))
                got = gamma_cdf(k, z)
                assert got == pytest.approx(expected, rel=1e-11, abs=1e-280)

    def test_poisson_duality_grid(self):
        for k in (1, 2, 7, 40, 200):
            for z in (0.5, 2.0, 9.0, 55.0, 380.0):
                a = gamma_cdf(k, z)
                p = poisson_cdf(z, k - 1)
                err = min(
                    abs(a - (1 - p)) / max(a, 1 - p, 1e-300),
                    abs((1 - a) - p) / max(1 - a, p, 1e-300),
                )
                assert err <= 1e-12


class TestPiTailSandwich:
    def test_clamped_lower(self):
        # k/beta tiny against the correction: empty bracketing event
        s = pi_tail_sandwich(1, 1, 100.0)
        assert s.lower == 0.0
        assert 0 < s.upper <= 1

    def test_worked_point(self):
        s = pi_tail_sandwich(10, 1, math.e)
        assert s.upper == pytest.approx(1 - math.exp(-1 / math.e), rel=1e-12)
        assert s.upper == pytest.approx(0.3078, abs=1e-4)
        expected_lower = 1 - math.exp(-(1 / math.e - math.log(1 + math.exp(1 / math.e) / 10)))
        assert s.lower == pytest.approx(expected_lower, rel=1e-12)
        assert s.lower == pytest.approx(0.2078, abs=1e-4)

    @given(
        st.integers(1, 10**6),
        st.integers(1, 400),
        st.floats(2.8, 40.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_lower_never_exceeds_upper(self, n, k, beta):
        s = pi_tail_sandwich(n, k, beta)
        assert 0.0 <= s.lower <= s.upper <= 1.0

    def test_invalid_bound_pair_rejected(self):
        with pytest.raises(ValueError):
            SandwichBound(0.5, 0.4)


class TestPoissonBinomialX1:
    def test_n2(self):
        assert poisson_binomial_x1(2) == {1: Fraction(1)}

    def test_n3(self):
        assert poisson_binomial_x1(3) == {1: Fraction(1, 2), 2: Fraction(1, 2)}

    def test_matches_tree_enumeration(self):
        # depth-1 counts over all increasing trees on 4 vertices:
        # star -> 3, two-chain variants -> 2, 2, 1x... enumerate directly
        from .oracles import enumerate_parent_arrays

        counts: dict[int, int] = {}
        for pa in enumerate_parent_arrays(4):
            x1 = sum(1 for p in pa if p == 0)
            counts[x1] = counts.get(x1, 0) + 1
        total = sum(counts.values())
        expected = {v: Fraction(c, total) for v, c in counts.items()}
        assert poisson_binomial_x1(4) == expected

    def test_harmonic_mean(self):
        for n in (2, 3, 10, 60):
            pmf = poisson_binomial_x1(n)
            assert sum(Fraction(v) * p for v, p in pmf.items()) == 1 + sum(
                Fraction(1, j) for j in range(2, n)
            )

    def test_pmf_sums_to_one(self):
        assert sum(poisson_binomial_x1(80).values()) == 1

    def test_log_dp_matches_exact(self):
        n = 300
        exact = poisson_binomial_x1(n)
        lp = poisson_binomial_x1_logpmf(n)
        for v, p in exact.items():
            if p > Fraction(1, 10**250):
                assert math.exp(lp[v]) == pytest.approx(float(p), rel=1e-9)

    def test_log_sf_is_cumulative(self):
        n = 50
        lsf = poisson_binomial_x1_log_sf(n)
        exact = poisson_binomial_x1(n)
        tail = Fraction(0)
        for t in sorted(exact, reverse=True):
            tail += exact[t]
            assert math.exp(lsf[t]) == pytest.approx(float(tail), rel=1e-10)


class TestRemarkInequality:
    @pytest.mark.parametrize("lam", [1e-6, 0.1, 1.0, 10.0, 100.0])
    def test_holds(self, lam):
        assert remark13_inequality(lam)

    def test_value_at_one(self):
        left = (math.e + 1) * math.log1p(1 / math.e)
        assert left == pytest.approx(1.16479, abs=1e-5)
        assert left > 1 / (2 * math.e) == pytest.approx(0.18394, abs=1e-5)


class TestThresholds:
    def test_lower(self):
        assert lower_height_threshold(10, 0.5) == 3
        assert lower_height_threshold(3, 0.9) == 2
        assert lower_height_threshold(64, 0.5) == 5

    def test_upper(self):
        assert upper_height_threshold(1000, 3.0) == 21
        assert upper_height_threshold(10_000, 3.0) == 28
        assert upper_height_threshold(100_000, 3.0) == 35
