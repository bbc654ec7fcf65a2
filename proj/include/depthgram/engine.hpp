#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "depthgram/dataset.hpp"
#include "depthgram/depth_core.hpp"
#include "depthgram/marginal.hpp"

/**
 * @file engine.hpp
 *
 * @brief Depth-of-depths representations of n x p x N functional data.
 *
 * A single pass over the dimensions sorts every (dimension, time point)
 * column once. From those counts it accumulates
 *  - per-dimension MBD/MEI columns (MBD_d, MEI_d, n x p),
 *  - per-time-point MBD/MEI across dimensions (MBD_t, MEI_t, n x N),
 *  - MEI_t of the sign-corrected data, using n_le in place of n_ge on
 *    dimensions whose cumulative correlation sign is negative.
 * All accumulators are integers, so the result does not depend on the order
 * in which workers finish.
 */

namespace depthgram {

enum class Variant { dimensions, time, time_correlation };

inline constexpr std::array<Variant, 3> kVariants = {Variant::dimensions, Variant::time, Variant::time_correlation};

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

/// Exact depth matrix stored column-major; entry (i, c) = numerators[c * rows + i] / (denominator * m).
struct DepthMatrix {
    DepthKind kind = DepthKind::mbd;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t m = 0;
    std::uint64_t denominator = 0;
    std::vector<std::uint64_t> numerators;

    bool empty() const { return numerators.empty(); }
    std::span<const std::uint64_t> column(std::size_t c) const { return {numerators.data() + c * rows, rows}; }
    double value(std::size_t i, std::size_t c) const {
        return static_cast<double>(numerators[c * rows + i]) / (static_cast<double>(denominator) * static_cast<double>(m));
    }
};

/// MBD_d and MEI_d are only populated when requested; the time matrices always are.
struct DepthMatrices {
    DepthMatrix mbd_d;
    DepthMatrix mei_d;
    DepthMatrix mbd_t;
    DepthMatrix mei_t;
    DepthMatrix mei_t_flipped;  ///< MEI_t of the sign-corrected data
};

/// Cumulative signs s_1 = +1, s_j = s_{j-1} sign(rho(MEI_d col j-1, MEI_d col j)).
struct SignChain {
    std::vector<std::int8_t> signs;
    std::size_t negative_steps = 0;  ///< correlations with negative sign

    std::size_t flipped_dimensions() const;
};

/// Sign of the Pearson correlation of two columns; +1 when it is zero or undefined.
int correlation_sign(std::span<const double> prev, std::span<const double> cur);

/// Exact variant for integer columns.
int correlation_sign(std::span<const std::uint64_t> prev, std::span<const std::uint64_t> cur);

/**
 * @brief One DepthGram: n points (1 - MEI of MBD rows, MBD of MEI rows).
 *
 * Second-level depths are kept as exact numerators over curves of length m
 * (m = p for the dimensions variant, N for the time variants).
 */
struct DepthGram {
    Variant variant = Variant::dimensions;
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::uint64_t> mei_numerators;  ///< MEI of the MBD rows, denominator n m
    std::vector<std::uint64_t> mbd_numerators;  ///< MBD of the MEI rows, denominator C(n,2) m
    std::vector<double> dg1;
    std::vector<double> dg2;
    std::vector<double> d_scores;  ///< dg2 - g_n(dg1)
    double F = 1.5;
    double threshold = 0.0;
    std::vector<bool> flags;

    std::vector<std::size_t> flagged() const;
};

/**
 * @brief Exact scaled distance to the g_n parabola.
 *
 * With DG2 = mbd / (C(n,2) m) and DG1 = 1 - mei / (n m), returns
 * 2 n (n-1) m^2 (DG2 - g_n(DG1)).
 */
__int128 depthgram_gap_scaled(std::uint64_t n, std::uint64_t m, std::uint64_t mbd, std::uint64_t mei);

/// Builds points and d-scores from second-level numerators (flags left empty).
DepthGram depthgram_points(Variant variant, std::size_t n, std::size_t m, std::vector<std::uint64_t> mei_of_mbd_rows,
                           std::vector<std::uint64_t> mbd_of_mei_rows);

/// Builds points from materialized first-level matrices: MEI over rows of `mbd_rows`, MBD over rows of `mei_rows`.
DepthGram depthgram_points(Variant variant, const DepthMatrix& mbd_rows, const DepthMatrix& mei_rows);

/// Fills threshold = Q3(d) + F IQR(d) and flags d_i > threshold.
void flag_outliers(DepthGram& dg, double F = 1.5);

/// Everything one dimension contributes; produced independently per dimension.
struct DimensionResult {
    std::size_t dimension = 0;
    std::vector<std::uint64_t> mbd_col;        ///< MBD_d numerators, n
    std::vector<std::uint64_t> mei_col;        ///< MEI_d numerators, n
    std::vector<std::uint32_t> mbd_col_ge;     ///< n_ge of each entry within mbd_col
    std::vector<std::uint64_t> mei_col_pairs;  ///< bands covering each entry within mei_col
    std::vector<std::uint32_t> pairs;          ///< N x n, column-major by time point
    std::vector<std::uint32_t> n_ge;
    std::vector<std::uint32_t> n_le;
    std::vector<std::uint8_t> magnitude_flags;  ///< only with marginal screening
    std::vector<std::uint8_t> shape_flags;
};

struct StreamOptions {
    bool keep_matrices = false;
    bool marginal = false;
    double F = 1.5;
};

/// Per-thread scratch for compute_dimension.
struct DimensionScratch {
    ColumnRanker<double> values;
    ColumnRanker<std::uint64_t> numerators;
    std::vector<double> column;
};

/// Sorts every time-point column of one dimension block (row-major n x N).
DimensionResult compute_dimension(std::size_t j, std::span<const double> block, std::size_t n, std::size_t N,
                                  const StreamOptions& options, DimensionScratch& scratch);

/**
 * @brief Accumulated state of a streaming pass.
 *
 * Working memory is O(n N) plus O(p) for the sign chain, or O(n p) more when
 * matrices are kept. Dimensions must be committed in storage order.
 */
class StreamState {
public:
    StreamState(std::size_t n, std::size_t p, std::size_t N, StreamOptions options = {});

    /// Computes and commits the next dimension.
    void accumulate_dimension(std::size_t j, std::span<const double> block);

    void commit(DimensionResult result);

    std::size_t next_dimension() const { return next_; }
    bool complete() const { return next_ == p_; }

    std::size_t observations() const { return n_; }
    std::size_t dimensions() const { return p_; }
    std::size_t time_points() const { return N_; }
    const StreamOptions& options() const { return options_; }

    DepthGram dimensions_depthgram() const;
    DepthGram time_depthgram() const;
    DepthGram time_correlation_depthgram() const;

    /// Time matrices always; dimension matrices only with keep_matrices.
    const DepthMatrices& matrices() const { return matrices_; }
    const SignChain& sign_chain() const { return chain_; }
    const MarginalFlags& marginal_flags() const { return marginal_; }

private:
    void require_complete() const;

    std::size_t n_;
    std::size_t p_;
    std::size_t N_;
    StreamOptions options_;
    std::size_t next_ = 0;
    DimensionScratch scratch_;

    DepthMatrices matrices_;
    std::vector<std::uint64_t> dim_mei_of_mbd_;
    std::vector<std::uint64_t> dim_mbd_of_mei_;
    SignChain chain_;
    std::vector<std::uint64_t> previous_mei_col_;
    MarginalFlags marginal_;
};

struct AnalysisConfig {
    double F = 1.5;
    bool run_marginal = false;
    bool emit_matrices = false;
    std::size_t threads = 1;
};

struct AnalysisReport {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t N = 0;
    double F = 1.5;
    std::array<DepthGram, 3> depthgrams;  ///< ordered as kVariants
    std::vector<std::size_t> outliers;    ///< union of the per-variant flag sets, 0-based
    std::size_t flipped_dimensions = 0;
    std::size_t negative_steps = 0;
    std::optional<MarginalFlags> marginal;
    std::optional<DepthMatrices> matrices;
    double elapsed_seconds = 0.0;

    const DepthGram& depthgram(Variant v) const { return depthgrams[static_cast<std::size_t>(v)]; }
    /// Variants that flagged observation i.
    std::vector<Variant> provenance(std::size_t i) const;
};

/// Flags every DepthGram of a completed stream and forms the union set.
AnalysisReport assemble_report(const StreamState& state, double F);

/**
 * @brief Full pipeline over a dataset.
 *
 * Dimensions are processed in batches: workers sort columns in parallel, then
 * a sequential stage commits the batch in dimension order. The report is
 * identical for any worker count.
 */
AnalysisReport analyze(const DimensionSource& source, const AnalysisConfig& config = {});

/// Throws std::invalid_argument if (n, p, N) could overflow the integer accumulators.
void check_accumulator_capacity(std::size_t n, std::size_t p, std::size_t N);

}  // namespace depthgram
