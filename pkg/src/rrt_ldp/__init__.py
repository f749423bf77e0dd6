"""Random recursive trees: simulation, exact height combinatorics, analytic
tail bounds, and reproducible rare-event Monte Carlo."""

from .analytic_bounds import (
    RateValues,
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
from .exact_engine import (
    ExactCdfTable,
    PartitionScheme,
    ResourceLimitError,
    bell_numbers,
    brute_force_height_dist,
    build_cdf_table,
    count_balanced_compositions,
    count_compositions_bounded,
    exact_height_cdf,
    omega_alpha,
    partition_scheme,
    small_part_count_dist,
    subtree_tail_product,
)
from .rare_event import (
    TailEstimate,
    TiltConfig,
    derive_stream,
    estimate_good_vertices,
    estimate_lower_tail_is,
    estimate_pi_tail,
    estimate_upper_tail,
    is_good_vertex,
    simulate_heights,
)
from .tree_core import (
    RecursiveTree,
    SubtreeDecomposition,
    TreeStats,
    ancestor,
    grow_floor_map,
    grow_uniform,
    grow_yule,
    subtree_decomposition,
    tree_stats,
)

__version__ = "0.1.0"
