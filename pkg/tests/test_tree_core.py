import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrt_ldp import (
    RecursiveTree,
    ancestor,
    grow_floor_map,
    grow_uniform,
    grow_yule,
    subtree_decomposition,
    tree_stats,
)
from rrt_ldp.rare_event import derive_stream

from .oracles import exact_height_pmf


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


# Parent array of the worked 15-vertex example: vertex labels 1..15 map to
# 0..14; removing the edges among {0,1,2,3} leaves components of sizes
# (5, 3, 3, 4) rooted at those four vertices.
FIG_TREE = RecursiveTree(15, np.array([0, 0, 1, 0, 1, 2, 3, 0, 4, 3, 0, 1, 2, 3]))


class TestGrowUniform:
    def test_single_root(self):
        t = grow_uniform(1, rng())
        assert t.n == 1 and t.parents.size == 0
        assert tree_stats(t).height == 0

    def test_forced_attachment(self):
        for seed in range(20):
            assert grow_uniform(2, rng(seed)).parents.tolist() == [0]

    def test_zero_vertices_rejected(self):
        with pytest.raises(ValueError):
            grow_uniform(0, rng())

    def test_n3_height_split(self):
        # two equally likely trees: star (height 1) and chain (height 2)
        reps = 100_000
        hits = 0
        for i in range(reps):
            t = grow_uniform(3, derive_stream(101, i))
            hits += tree_stats(t).height == 2
        se = math.sqrt(0.25 / reps)
        assert abs(hits / reps - 0.5) <= 4 * se


class TestGrowFloorMap:
    def test_single_candidate(self):
        # t=1 with U=0.7 -> floor(0.7) = 0

        class Fixed:
            def random(self, size):
                return np.full(size, 0.7)

        t = grow_floor_map(2, Fixed())
        assert t.parents.tolist() == [0]

    def test_floor_evaluation(self):
        class Fixed:
            def random(self, size):
                return np.array([0.9, 0.6])

        t = grow_floor_map(3, Fixed())
        # t=2 with U=0.6 -> floor(1.2) = 1
        assert t.parents.tolist() == [0, 1]

    def test_product_never_reaches_t(self):
        # floor(t * U) must stay <= t-1 even for U at the top of [0, 1)
        u_max = np.nextafter(1.0, 0.0)

        class Fixed:
            def random(self, size):
                return np.full(size, u_max)

        t = grow_floor_map(1000, Fixed())
        assert np.all(t.parents == np.arange(999))

    def test_matches_uniform_in_distribution(self):
        # two-sample chi-square on heights at n=50
        from rrt_ldp.checks import two_sample_chisquare_pvalue
        from rrt_ldp.rare_event import simulate_heights

        a = np.bincount(simulate_heights(50, 100_000, 2024, "uniform"), minlength=50)
        b = np.bincount(simulate_heights(50, 100_000, 2025, "floor"), minlength=50)
        assert two_sample_chisquare_pvalue(a, b) > 0.001


class TestGrowYule:
    def test_first_birth_attaches_to_root(self):
        for seed in range(20):
            t, births = grow_yule(2, rng(seed))
            assert t.parents.tolist() == [0]
            assert births[0] == 0.0 and births[1] > 0.0

    def test_birth_times_increase(self):
        _, births = grow_yule(200, rng(5))
        assert np.all(np.diff(births) > 0)

    def test_height_pmf_n4(self):
        pmf = exact_height_pmf(4)
        assert pmf == {1: pytest.approx(1 / 6), 2: pytest.approx(4 / 6), 3: pytest.approx(1 / 6)}
        reps = 100_000
        counts = np.zeros(4, dtype=int)
        for i in range(reps):
            t, _ = grow_yule(4, derive_stream(55, i))
            counts[tree_stats(t).height] += 1
        for h, p in pmf.items():
            se = math.sqrt(float(p) * (1 - float(p)) / reps)
            assert abs(counts[h] / reps - float(p)) <= 4 * se

    def test_last_waiting_time_mean(self):
        # tau_n - tau_{n-1} is the minimum of n-1 unit exponentials
        n, reps = 6, 100_000
        gaps = np.empty(reps)
        for i in range(reps):
            _, births = grow_yule(n, derive_stream(77, i))
            gaps[i] = births[-1] - births[-2]
        se = gaps.std() / math.sqrt(reps)
        assert abs(gaps.mean() - 1 / (n - 1)) <= 4 * se


class TestTreeStats:
    def test_chain(self):
        t = RecursiveTree(4, np.array([0, 1, 2]))
        s = tree_stats(t)
        assert s.depths.tolist() == [0, 1, 2, 3]
        assert s.height == 3
        assert s.level_sizes.tolist() == [1, 1, 1, 1]

    def test_star(self):
        s = tree_stats(RecursiveTree(4, np.array([0, 0, 0])))
        assert s.height == 1 and s.level_sizes.tolist() == [1, 3]

    @given(st.integers(1, 300), st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_level_sizes_partition_vertices(self, n, seed):
        s = tree_stats(grow_uniform(n, rng(seed)))
        assert int(s.level_sizes.sum()) == n
        assert s.level_sizes[0] == 1
        assert s.height == len(s.level_sizes) - 1


class TestSubtreeDecomposition:
    def test_all_cut(self):
        t = grow_uniform(9, rng(3))
        assert subtree_decomposition(t, 9).sizes.tolist() == [1] * 9

    def test_nothing_cut(self):
        t = grow_uniform(9, rng(4))
        assert subtree_decomposition(t, 1).sizes.tolist() == [9]

    def test_worked_example(self):
        assert subtree_decomposition(FIG_TREE, 4).sizes.tolist() == [5, 3, 3, 4]

    def test_m_out_of_range(self):
        t = grow_uniform(5, rng())
        for m in (0, 6):
            with pytest.raises(ValueError):
                subtree_decomposition(t, m)

    @given(st.integers(2, 60), st.data())
    @settings(max_examples=40, deadline=None)
    def test_sizes_sum_to_n(self, n, data):
        t = grow_uniform(n, rng(data.draw(st.integers(0, 2**32))))
        m = data.draw(st.integers(1, n))
        sizes = subtree_decomposition(t, m).sizes
        assert sizes.size == m
        assert int(sizes.sum()) == n
        assert np.all(sizes >= 1)


class TestAncestor:
    def test_identity(self):
        t = grow_uniform(10, rng(1))
        for x in range(10):
            assert ancestor(t, x, 0) == x

    def test_chain_walk(self):
        t = RecursiveTree(4, np.array([0, 1, 2]))
        assert ancestor(t, 3, 2) == 1

    def test_clamps_at_root(self):
        t = RecursiveTree(4, np.array([0, 1, 2]))
        assert ancestor(t, 3, 99) == 0

    @given(st.integers(2, 200), st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_depth_is_first_root_hit(self, n, seed):
        t = grow_uniform(n, rng(seed))
        depths = tree_stats(t).depths
        for x in (0, 1, n // 2, n - 1):
            d = int(depths[x])
            assert ancestor(t, x, d) == 0
            if d > 0:
                assert ancestor(t, x, d - 1) >= 1


class TestInvariants:
    @given(st.integers(1, 500), st.integers(0, 2**32))
    @settings(max_examples=50, deadline=None)
    def test_increasing_property(self, n, seed):
        for grow in (grow_uniform, grow_floor_map):
            t = grow(n, rng(seed))
            if n > 1:
                assert np.all(t.parents < np.arange(1, n))

    def test_invalid_parent_array_rejected(self):
        with pytest.raises(ValueError):
            RecursiveTree(3, np.array([0, 2]))
        with pytest.raises(ValueError):
            RecursiveTree(3, np.array([0]))

    def test_trees_are_immutable(self):
        t = grow_uniform(10, rng())
        with pytest.raises(ValueError):
            t.parents[0] = 3

    def test_determinism_bitwise(self):
        for n in (1, 2, 100, 2000):
            a = grow_uniform(n, rng(9)).parents
            b = grow_uniform(n, rng(9)).parents
            assert np.array_equal(a, b)
            c = grow_floor_map(n, rng(9)).parents
            d = grow_floor_map(n, rng(9)).parents
            assert np.array_equal(c, d)
            (ty1, bt1), (ty2, bt2) = grow_yule(n, rng(9)), grow_yule(n, rng(9))
            assert np.array_equal(ty1.parents, ty2.parents) and np.array_equal(bt1, bt2)
