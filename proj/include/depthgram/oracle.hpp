#pragma once

#include <cstdint>

#include "depthgram/depth_core.hpp"

// Literal transcriptions of the MBD and MEI definitions. Quadratic (MBD: cubic)
// in n; meant for cross-checking the rank-based kernels on small samples.

namespace depthgram::oracle {

DepthVector mbd_brute(const FunctionalSample& sample);
DepthVector mei_brute(const FunctionalSample& sample);

/// Point counts by direct comparison against every other element and every pair.
std::vector<PointCounts> pointwise_counts_brute(std::span<const double> column);

/**
 * @brief Random sample with deliberate ties.
 *
 * Values are drawn from a small integer lattice, some rows are copies of
 * earlier rows, and some columns are constant.
 */
FunctionalSample random_tied_sample(std::size_t n, std::size_t m, std::uint64_t seed, std::uint64_t trial);

struct OracleCheckResult {
    std::size_t trials = 0;
    std::size_t mismatches = 0;
    double max_abs_error = 0.0;
};

/// Runs `trials` random comparisons of the rank-based kernels against the brute-force definitions.
OracleCheckResult run_oracle_check(std::size_t max_n, std::size_t max_m, std::size_t trials, std::uint64_t seed,
                                   double tolerance = 1e-12);

}  // namespace depthgram::oracle
