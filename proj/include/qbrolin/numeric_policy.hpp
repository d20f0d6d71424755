#pragma once

#include <cstddef>

namespace qbrolin {

/// Tolerances and budgets shared by every module. One process-wide record;
/// the CLI overwrites it from the run config before any computation.
struct NumericPolicy {
    double slice_tol = 1e-12;          // off-plane component allowed by restrict_to_slice
    double cluster_rel = 1e-7;         // root clustering radius, relative to root scale
    double residual_rel = 1e-9;        // fiber residual bound, times (1 + |w|)
    double real_tol = 1e-9;            // |Im z| below this classifies a root as real
    int aberth_max_iter = 500;
    std::size_t preimage_budget = std::size_t{1} << 20;
    std::size_t degree_budget = 4096;  // coefficient count for g_n / h_n builds
    int exceptional_depth = 5;
    int burn_in = 30;
    double clamp_fail_fraction = 0.02;
};

NumericPolicy& numeric_policy();

}  // namespace qbrolin
