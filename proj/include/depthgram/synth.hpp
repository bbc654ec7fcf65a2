#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "depthgram/dataset.hpp"
#include "depthgram/engine.hpp"
#include "depthgram/random.hpp"

/**
 * @file synth.hpp
 *
 * @brief Synthetic multivariate functional data (Models 1-4) and the simulation-study harness.
 *
 * Every component follows a varying-coefficient model
 *   x_i^j(t) = X_i^0(t) h_j(t) + e_ij(t)
 * with magnitude outliers shifted by +10, shape outliers built on a different
 * reference curve and joint outliers borrowing the reference curve of another
 * observation. 15 nominal outliers occupy the last 15 indices: 5 magnitude,
 * 5 shape, then 5 joint.
 *
 * Randomness is keyed by (seed, purpose, i, j) through Philox4x32-10, so a
 * dataset is fully determined by its ModelConfig.
 */

namespace depthgram {

enum class OutlierType : std::uint8_t { typical, magnitude, shape, joint };

std::string_view outlier_type_name(OutlierType type);
OutlierType parse_outlier_type(std::string_view name);

inline constexpr std::size_t kOutliersPerType = 5;
inline constexpr std::size_t kNominalOutliers = 3 * kOutliersPerType;

/// Nominal role of observation i (0-based) in a sample of size n.
OutlierType nominal_type(std::size_t i, std::size_t n);

struct ModelConfig {
    int model = 1;
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t N = 100;
    double c = 1.0;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on an out-of-range field.
    void validate() const;

    /// round(c p), the number of dimensions on which each outlier misbehaves.
    std::size_t contaminated_count() const;
};

/**
 * @brief Labels of a generated dataset. Indices are 0-based.
 *
 * `contaminated[i]` lists the dimensions on which observation i follows its
 * outlying branch (empty for typical observations and whenever c p rounds to 0).
 */
struct GroundTruth {
    int model = 1;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t N = 0;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::vector<OutlierType> nominal;
    std::vector<std::vector<std::uint32_t>> contaminated;
    std::vector<std::vector<std::uint32_t>> joint_refs;  ///< p reference indices per joint outlier
    std::vector<double> alphas;

    /// Role used for scoring: typical unless contaminated somewhere.
    OutlierType effective(std::size_t i) const;
    bool is_contaminated(std::size_t i, std::size_t j) const;
};

/// Evaluation grid t_k = (k-1)/(N-1) on [0, 1]; {0} when N = 1.
std::vector<double> time_grid(std::size_t N);

/// h_j(t) = 1 + 2 t^(1+j/p) (1-t)^(2-j/p), negated for even j when `alternating`. j is 1-based.
double coefficient_h(std::size_t j, std::size_t p, double t, bool alternating);

/// Reference curves X^0 (typical) and X^0s (shape outliers) of Models 1/3 and 2/4.
double reference_curve(int model, double alpha, double t);
double shape_reference_curve(int model, double alpha, double t);

/**
 * @brief Zero-mean Gaussian process with covariance v exp(-|s-t| / r) on a fixed grid.
 *
 * Draws are L z with L the lower Cholesky factor of the covariance matrix
 * and z standard normal. A 1e-10 diagonal jitter is added if the plain
 * factorization fails.
 */
class GaussianProcessNoise {
public:
    explicit GaussianProcessNoise(std::span<const double> grid, double variance = 0.3, double range = 0.3);

    std::size_t size() const { return size_; }
    double jitter() const { return jitter_; }

    /// One draw into `out` (size N).
    void draw(CounterStream& stream, std::span<double> out) const;

    /// Noise for the n curves of dimension j, row-major n x N; curve i uses stream (seed, noise, i, j).
    void draw_dimension(std::uint64_t seed, std::size_t j, std::size_t n, std::span<double> out) const;

private:
    std::size_t size_;
    double jitter_ = 0.0;
    std::vector<double> factor_;  ///< column-major lower-triangular N x N
};

/**
 * @brief Joint-outlier reference indices.
 *
 * Models 1/2: uniform over the typical observations, independently per (i, j).
 * Models 3/4: joint outliers first take the 3 smallest and 2 largest alpha
 * values (swapping with their holders, so `alphas` is modified); then
 * ell_ij = i for odd j and r_i otherwise, r_i being the typical observation
 * at the mirrored alpha rank.
 *
 * Returns one vector of p indices per observation (empty for non-joint ones).
 */
std::vector<std::vector<std::uint32_t>> assign_joint_refs(int model, std::vector<double>& alphas, std::size_t p,
                                                          std::uint64_t seed);

/// A model dataset generated on demand, one dimension at a time.
class SyntheticDataset final : public DimensionSource {
public:
    explicit SyntheticDataset(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const GroundTruth& truth() const { return truth_; }

    std::size_t observations() const override { return config_.n; }
    std::size_t dimensions() const override { return config_.p; }
    std::size_t time_points() const override { return config_.N; }
    std::span<const double> time_grid() const override { return grid_; }
    void read_dimension(std::size_t j, std::span<double> out) const override;

    /// Value of observation i in dimension j when it follows the typical branch, given its noise.
    double typical_value(std::size_t i, std::size_t j, std::size_t k, double noise) const;

private:
    ModelConfig config_;
    GroundTruth truth_;
    std::vector<double> grid_;
    GaussianProcessNoise noise_;
    std::vector<double> reference_;        ///< n x N, X_i^0(t_k)
    std::vector<double> shape_reference_;  ///< n x N, X_i^0s(t_k)
    std::vector<std::vector<std::uint8_t>> contaminated_mask_;
};

/// Streams the dataset to `sink` in dimension order and returns its labels.
GroundTruth generate(const ModelConfig& config,
                     const std::function<void(std::size_t, std::span<const double>)>& sink);

struct StudyConfig {
    int model = 1;
    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t N = 100;
    std::vector<double> c_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    double F = 1.5;
    bool marginal = true;
    bool keep_points = true;
    std::size_t threads = 1;
};

/// Mean and sample standard deviation over the replicates where a rate is defined.
struct RateStat {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

/// Detection rates of one replicate; NaN when the rate has no positives (e.g. c = 0).
struct ReplicateScores {
    double dg_magnitude = 0.0;
    double dg_shape = 0.0;
    double dg_joint = 0.0;
    double dg_false = 0.0;
    double marginal_magnitude_pc = 0.0;
    double marginal_magnitude_pf = 0.0;
    double marginal_shape_pc = 0.0;
    double marginal_shape_pf = 0.0;
};

struct ConfigSummary {
    double c = 0.0;
    std::size_t replicates = 0;
    RateStat dg_magnitude;
    RateStat dg_shape;
    RateStat dg_joint;
    RateStat dg_false;
    RateStat marginal_magnitude_pc;
    RateStat marginal_magnitude_pf;
    RateStat marginal_shape_pc;
    RateStat marginal_shape_pf;
};

struct PooledPoint {
    double c = 0.0;
    std::size_t replicate = 0;
    std::size_t observation = 0;
    OutlierType cls = OutlierType::typical;
    Variant variant = Variant::dimensions;
    double dg1 = 0.0;
    double dg2 = 0.0;
    bool flagged = false;
};

struct StudySummary {
    StudyConfig config;
    std::vector<ConfigSummary> rows;
    std::vector<PooledPoint> points;
};

/**
 * @brief Scores one analyzed replicate.
 *
 * DepthGram rates are per observation: the share of each outlier class in
 * the union set, and the share of typical observations in it. Marginal rates
 * are per (observation, dimension) component: positives are contaminated
 * components of the screened class, negatives are components on the typical
 * branch.
 */
ReplicateScores score_replicate(const GroundTruth& truth, const AnalysisReport& report);

RateStat summarize_rates(std::span<const double> values);

StudySummary run_study(const StudyConfig& config);

}  // namespace depthgram
