#include "depthgram/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace depthgram {

std::string_view outlier_type_name(OutlierType type) {
    switch (type) {
        case OutlierType::typical: return "typical";
        case OutlierType::magnitude: return "magnitude";
        case OutlierType::shape: return "shape";
        case OutlierType::joint: return "joint";
    }
    return "typical";
}

OutlierType parse_outlier_type(std::string_view name) {
    for (auto type : {OutlierType::typical, OutlierType::magnitude, OutlierType::shape, OutlierType::joint}) {
        if (outlier_type_name(type) == name) {
            return type;
        }
    }
    throw std::invalid_argument("unknown outlier type '" + std::string(name) + "'");
}

OutlierType nominal_type(std::size_t i, std::size_t n) {
    if (n < kNominalOutliers || i >= n) {
        throw std::invalid_argument("observation index outside the sample");
    }
    const std::size_t first = n - kNominalOutliers;
    if (i < first) {
        return OutlierType::typical;
    }
    switch ((i - first) / kOutliersPerType) {
        case 0: return OutlierType::magnitude;
        case 1: return OutlierType::shape;
        default: return OutlierType::joint;
    }
}

void ModelConfig::validate() const {
    if (model < 1 || model > 4) {
        throw std::invalid_argument("model must be 1, 2, 3 or 4");
    }
    if (n < 20) {
        throw std::invalid_argument("n must be at least 20");
    }
    if (p == 0 || N == 0) {
        throw std::invalid_argument("p and N must be positive");
    }
    if (n > std::numeric_limits<std::uint32_t>::max() || p > std::numeric_limits<std::uint32_t>::max() ||
        N > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("n, p and N must fit in 32 bits");
    }
    if (!(c >= 0.0 && c <= 1.0)) {
        throw std::invalid_argument("contamination rate c must lie in [0, 1]");
    }
}

std::size_t ModelConfig::contaminated_count() const {
    return static_cast<std::size_t>(std::llround(c * static_cast<double>(p)));
}

OutlierType GroundTruth::effective(std::size_t i) const {
    return contaminated[i].empty() ? OutlierType::typical : nominal[i];
}

bool GroundTruth::is_contaminated(std::size_t i, std::size_t j) const {
    const auto& dims = contaminated[i];
    return std::binary_search(dims.begin(), dims.end(), static_cast<std::uint32_t>(j));
}

std::vector<double> time_grid(std::size_t N) {
    if (N == 0) {
        throw std::invalid_argument("time grid needs N >= 1");
    }
    std::vector<double> grid(N, 0.0);
    for (std::size_t k = 1; k < N; ++k) {
        grid[k] = static_cast<double>(k) / static_cast<double>(N - 1);
    }
    return grid;
}

double coefficient_h(std::size_t j, std::size_t p, double t, bool alternating) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("coefficient_h needs t in [0, 1]");
    }
    if (j < 1 || j > p) {
        throw std::invalid_argument("coefficient_h needs 1 <= j <= p");
    }
    const double ratio = static_cast<double>(j) / static_cast<double>(p);
    const double value = 1.0 + 2.0 * std::pow(t, 1.0 + ratio) * std::pow(1.0 - t, 2.0 - ratio);
    return (alternating && j % 2 == 0) ? -value : value;
}

namespace {

bool sinusoidal(int model) { return model == 1 || model == 3; }

}  // namespace

double reference_curve(int model, double alpha, double t) {
    constexpr double pi = std::numbers::pi;
    return sinusoidal(model) ? std::sin(4.0 * pi * t) + alpha : 4.0 * t + alpha;
}

double shape_reference_curve(int model, double alpha, double t) {
    constexpr double pi = std::numbers::pi;
    return sinusoidal(model) ? std::cos(4.0 * pi * t + pi / 2.0) + alpha
                             : 4.0 * t + 2.0 * std::sin(4.0 * (t + 0.5) * pi) + alpha;
}

GaussianProcessNoise::GaussianProcessNoise(std::span<const double> grid, double variance, double range)
    : size_(grid.size()) {
    if (grid.empty()) {
        throw std::invalid_argument("Gaussian process needs N >= 1");
    }
    const auto N = static_cast<Eigen::Index>(size_);
    Eigen::MatrixXd cov(N, N);
    for (Eigen::Index a = 0; a < N; ++a) {
        for (Eigen::Index b = 0; b < N; ++b) {
            cov(a, b) = variance * std::exp(-std::abs(grid[a] - grid[b]) / range);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        jitter_ = 1e-10;
        cov.diagonal().array() += jitter_;
        llt.compute(cov);
        if (llt.info() != Eigen::Success) {
            throw InvariantError("covariance factorization failed for N = " + std::to_string(size_) +
                                 " even with 1e-10 jitter");
        }
    }
    Eigen::MatrixXd lower = llt.matrixL();
    factor_.assign(lower.data(), lower.data() + lower.size());
}

void GaussianProcessNoise::draw(CounterStream& stream, std::span<double> out) const {
    if (out.size() != size_) {
        throw std::invalid_argument("noise buffer has the wrong size");
    }
    std::vector<double> z(size_);
    for (auto& v : z) {
        v = stream.next_normal();
    }
    for (std::size_t a = 0; a < size_; ++a) {
        double sum = 0.0;
        for (std::size_t b = 0; b <= a; ++b) {
            sum += factor_[b * size_ + a] * z[b];
        }
        out[a] = sum;
    }
}

void GaussianProcessNoise::draw_dimension(std::uint64_t seed, std::size_t j, std::size_t n,
                                          std::span<double> out) const {
    if (out.size() != n * size_) {
        throw std::invalid_argument("noise block has the wrong size");
    }
    const auto N = static_cast<Eigen::Index>(size_);
    Eigen::MatrixXd z(N, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        CounterStream stream(seed, StreamTag::noise, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        for (Eigen::Index k = 0; k < N; ++k) {
            z(k, static_cast<Eigen::Index>(i)) = stream.next_normal();
        }
    }
    Eigen::Map<const Eigen::MatrixXd> lower(factor_.data(), N, N);
    Eigen::Map<Eigen::MatrixXd> result(out.data(), N, static_cast<Eigen::Index>(n));
    result.noalias() = lower.triangularView<Eigen::Lower>() * z;
}

std::vector<std::vector<std::uint32_t>> assign_joint_refs(int model, std::vector<double>& alphas, std::size_t p,
                                                          std::uint64_t seed) {
    const std::size_t n = alphas.size();
    if (n < 20) {
        throw std::invalid_argument("joint references need n >= 20");
    }
    const std::size_t typical = n - kNominalOutliers;
    const std::size_t first_joint = n - kOutliersPerType;
    std::vector<std::vector<std::uint32_t>> refs(n);

    if (model == 1 || model == 2) {
        for (std::size_t i = first_joint; i < n; ++i) {
            CounterStream stream(seed, StreamTag::joint_reference, static_cast<std::uint32_t>(i), 0);
            refs[i].resize(p);
            for (auto& r : refs[i]) {
                r = static_cast<std::uint32_t>(stream.next_below(typical));
            }
        }
        return refs;
    }

    std::vector<double> sorted = alphas;
    std::sort(sorted.begin(), sorted.end());
    const std::array<double, kOutliersPerType> targets = {sorted[0], sorted[1], sorted[2], sorted[n - 1], sorted[n - 2]};
    for (std::size_t q = 0; q < kOutliersPerType; ++q) {
        const auto holder = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), targets[q]) - alphas.begin());
        std::swap(alphas[holder], alphas[first_joint + q]);
    }

    std::vector<std::size_t> ascending(typical);
    std::iota(ascending.begin(), ascending.end(), std::size_t{0});
    std::sort(ascending.begin(), ascending.end(), [&](std::size_t a, std::size_t b) { return alphas[a] < alphas[b]; });

    for (std::size_t q = 0; q < kOutliersPerType; ++q) {
        const std::size_t i = first_joint + q;
        // Joint outliers 0-2 hold the 1st-3rd smallest alphas, 3-4 the largest and 2nd largest.
        const std::size_t r = q < 3 ? ascending[typical - 1 - q] : ascending[q - 3];
        refs[i].resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            refs[i][j] = static_cast<std::uint32_t>(j % 2 == 0 ? i : r);
        }
    }
    return refs;
}

SyntheticDataset::SyntheticDataset(const ModelConfig& config)
    : config_((config.validate(), config)), grid_(depthgram::time_grid(config.N)), noise_(grid_) {
    const std::size_t n = config_.n;
    const std::size_t p = config_.p;
    const std::size_t N = config_.N;

    truth_.model = config_.model;
    truth_.n = n;
    truth_.p = p;
    truth_.N = N;
    truth_.c = config_.c;
    truth_.seed = config_.seed;
    truth_.nominal.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        truth_.nominal[i] = nominal_type(i, n);
    }

    truth_.alphas.resize(n);
    CounterStream alpha_stream(config_.seed, StreamTag::alpha, 0, 0);
    for (auto& a : truth_.alphas) {
        a = alpha_stream.next_normal();
    }
    truth_.joint_refs = assign_joint_refs(config_.model, truth_.alphas, p, config_.seed);

    const std::size_t K = config_.contaminated_count();
    truth_.contaminated.resize(n);
    contaminated_mask_.resize(n);
    std::vector<std::uint32_t> pool;
    for (std::size_t i = n - kNominalOutliers; i < n && K > 0; ++i) {
        pool.resize(p);
        std::iota(pool.begin(), pool.end(), std::uint32_t{0});
        CounterStream stream(config_.seed, StreamTag::contamination, static_cast<std::uint32_t>(i), 0);
        for (std::size_t s = 0; s < K; ++s) {
            const std::size_t pick = s + static_cast<std::size_t>(stream.next_below(p - s));
            std::swap(pool[s], pool[pick]);
        }
        auto& dims = truth_.contaminated[i];
        dims.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(K));
        std::sort(dims.begin(), dims.end());
        contaminated_mask_[i].assign(p, 0);
        for (auto j : dims) {
            contaminated_mask_[i][j] = 1;
        }
    }

    reference_.resize(n * N);
    shape_reference_.resize(n * N);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < N; ++k) {
            reference_[i * N + k] = reference_curve(config_.model, truth_.alphas[i], grid_[k]);
            shape_reference_[i * N + k] = shape_reference_curve(config_.model, truth_.alphas[i], grid_[k]);
        }
    }
}

double SyntheticDataset::typical_value(std::size_t i, std::size_t j, std::size_t k, double noise) const {
    const bool alternating = config_.model == 2 || config_.model == 4;
    return reference_[i * config_.N + k] * coefficient_h(j + 1, config_.p, grid_[k], alternating) + noise;
}

void SyntheticDataset::read_dimension(std::size_t j, std::span<double> out) const {
    const std::size_t n = config_.n;
    const std::size_t N = config_.N;
    if (j >= config_.p) {
        throw std::out_of_range("dimension " + std::to_string(j) + " out of range");
    }
    if (out.size() != n * N) {
        throw std::invalid_argument("dimension buffer has the wrong size");
    }
    noise_.draw_dimension(config_.seed, j, n, out);

    const bool alternating = config_.model == 2 || config_.model == 4;
    std::vector<double> h(N);
    for (std::size_t k = 0; k < N; ++k) {
        h[k] = coefficient_h(j + 1, config_.p, grid_[k], alternating);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * N;
        const bool outlying = !contaminated_mask_[i].empty() && contaminated_mask_[i][j];
        const OutlierType branch = outlying ? truth_.nominal[i] : OutlierType::typical;
        switch (branch) {
            case OutlierType::typical: {
                const double* ref = reference_.data() + i * N;
                for (std::size_t k = 0; k < N; ++k) {
                    row[k] = ref[k] * h[k] + row[k];
                }
                break;
            }
            case OutlierType::magnitude: {
                const double* ref = reference_.data() + i * N;
                for (std::size_t k = 0; k < N; ++k) {
                    row[k] = (10.0 + ref[k] * h[k]) + row[k];
                }
                break;
            }
            case OutlierType::shape: {
                const double* ref = shape_reference_.data() + i * N;
                for (std::size_t k = 0; k < N; ++k) {
                    row[k] = ref[k] * h[k] + row[k];
                }
                break;
            }
            case OutlierType::joint: {
                const double* ref = reference_.data() + std::size_t{truth_.joint_refs[i][j]} * N;
                for (std::size_t k = 0; k < N; ++k) {
                    row[k] = ref[k] * h[k] + row[k];
                }
                break;
            }
        }
    }
}

GroundTruth generate(const ModelConfig& config,
                     const std::function<void(std::size_t, std::span<const double>)>& sink) {
    const SyntheticDataset data(config);
    std::vector<double> block(data.block_size());
    for (std::size_t j = 0; j < config.p; ++j) {
        data.read_dimension(j, block);
        sink(j, block);
    }
    return data.truth();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio_or_nan(std::size_t hits, std::size_t total) {
    return total == 0 ? kNaN : static_cast<double>(hits) / static_cast<double>(total);
}

std::size_t count_common(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

}  // namespace

ReplicateScores score_replicate(const GroundTruth& truth, const AnalysisReport& report) {
    if (report.n != truth.n || report.p != truth.p) {
        throw std::invalid_argument("report and labels describe different datasets");
    }
    const std::size_t n = truth.n;
    std::array<std::size_t, 4> total{}, hits{};
    std::vector<bool> flagged(n, false);
    for (auto i : report.outliers) {
        flagged[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = static_cast<std::size_t>(truth.effective(i));
        ++total[cls];
        hits[cls] += flagged[i];
    }
    ReplicateScores s;
    s.dg_magnitude = ratio_or_nan(hits[1], total[1]);
    s.dg_shape = ratio_or_nan(hits[2], total[2]);
    s.dg_joint = ratio_or_nan(hits[3], total[3]);
    s.dg_false = ratio_or_nan(hits[0], total[0]);

    if (!report.marginal) {
        s.marginal_magnitude_pc = s.marginal_magnitude_pf = kNaN;
        s.marginal_shape_pc = s.marginal_shape_pf = kNaN;
        return s;
    }
    const MarginalFlags& m = *report.marginal;
    std::size_t contaminated_total = 0;
    std::size_t mag_pos = 0, mag_tp = 0, mag_fp = 0;
    std::size_t shape_pos = 0, shape_tp = 0, shape_fp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& dims = truth.contaminated[i];
        contaminated_total += dims.size();
        const std::size_t mag_in = count_common(m.magnitude_dims[i], dims);
        const std::size_t shape_in = count_common(m.shape_dims[i], dims);
        mag_fp += m.magnitude_dims[i].size() - mag_in;
        shape_fp += m.shape_dims[i].size() - shape_in;
        if (truth.nominal[i] == OutlierType::magnitude) {
            mag_pos += dims.size();
            mag_tp += mag_in;
        } else if (truth.nominal[i] == OutlierType::shape) {
            shape_pos += dims.size();
            shape_tp += shape_in;
        }
    }
    const std::size_t negatives = n * truth.p - contaminated_total;
    s.marginal_magnitude_pc = ratio_or_nan(mag_tp, mag_pos);
    s.marginal_magnitude_pf = ratio_or_nan(mag_fp, negatives);
    s.marginal_shape_pc = ratio_or_nan(shape_tp, shape_pos);
    s.marginal_shape_pf = ratio_or_nan(shape_fp, negatives);
    return s;
}

RateStat summarize_rates(std::span<const double> values) {
    RateStat stat;
    double sum = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) {
            sum += v;
            ++stat.count;
        }
    }
    if (stat.count == 0) {
        stat.mean = stat.sd = kNaN;
        return stat;
    }
    stat.mean = sum / static_cast<double>(stat.count);
    if (stat.count > 1) {
        double ss = 0.0;
        for (double v : values) {
            if (!std::isnan(v)) {
                ss += (v - stat.mean) * (v - stat.mean);
            }
        }
        stat.sd = std::sqrt(ss / static_cast<double>(stat.count - 1));
    }
    return stat;
}

StudySummary run_study(const StudyConfig& config) {
    if (config.replicates == 0 || config.c_grid.empty()) {
        throw std::invalid_argument("study needs at least one replicate and one contamination rate");
    }
    StudySummary summary;
    summary.config = config;
    AnalysisConfig analysis;
    analysis.F = config.F;
    analysis.run_marginal = config.marginal;
    analysis.threads = config.threads;

    for (double c : config.c_grid) {
        std::vector<ReplicateScores> scores;
        scores.reserve(config.replicates);
        for (std::size_t rep = 0; rep < config.replicates; ++rep) {
            ModelConfig model{config.model, config.n, config.p, config.N, c, derive_seed(config.seed, rep)};
            const SyntheticDataset data(model);
            const AnalysisReport report = analyze(data, analysis);
            scores.push_back(score_replicate(data.truth(), report));
            if (config.keep_points) {
                for (const auto& dg : report.depthgrams) {
                    for (std::size_t i = 0; i < report.n; ++i) {
                        summary.points.push_back(PooledPoint{c, rep, i, data.truth().effective(i), dg.variant,
                                                             dg.dg1[i], dg.dg2[i], static_cast<bool>(dg.flags[i])});
                    }
                }
            }
        }
        auto field = [&](double ReplicateScores::*member) {
            std::vector<double> values;
            values.reserve(scores.size());
            for (const auto& s : scores) {
                values.push_back(s.*member);
            }
            return summarize_rates(values);
        };
        ConfigSummary row;
        row.c = c;
        row.replicates = config.replicates;
        row.dg_magnitude = field(&ReplicateScores::dg_magnitude);
        row.dg_shape = field(&ReplicateScores::dg_shape);
        row.dg_joint = field(&ReplicateScores::dg_joint);
        row.dg_false = field(&ReplicateScores::dg_false);
        row.marginal_magnitude_pc = field(&ReplicateScores::marginal_magnitude_pc);
        row.marginal_magnitude_pf = field(&ReplicateScores::marginal_magnitude_pf);
        row.marginal_shape_pc = field(&ReplicateScores::marginal_shape_pc);
        row.marginal_shape_pf = field(&ReplicateScores::marginal_shape_pf);
        summary.rows.push_back(row);
    }
    return summary;
}

}  // namespace depthgram
