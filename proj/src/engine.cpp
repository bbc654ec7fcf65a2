#include "depthgram/engine.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

namespace depthgram {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::dimensions:
            return "dimensions";
        case Variant::time:
            return "time";
        case Variant::time_correlation:
            return "time_correlation";
    }
    return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
    for (Variant v : kVariants) {
        if (variant_name(v) == name) {
            return v;
        }
    }
    return std::nullopt;
}

std::size_t SignChain::flipped_dimensions() const {
    std::size_t count = 0;
    for (auto s : signs) {
        count += s < 0;
    }
    return count;
}

int correlation_sign(std::span<const double> prev, std::span<const double> cur) {
    if (prev.size() != cur.size()) {
        throw std::invalid_argument("correlation of columns with different lengths");
    }
    const std::size_t n = prev.size();
    if (n == 0) {
        return 1;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += prev[i];
        my += cur[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = prev[i] - mx;
        const double dy = cur[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 1;
    }
    return sxy < 0.0 ? -1 : 1;
}

int correlation_sign(std::span<const std::uint64_t> prev, std::span<const std::uint64_t> cur) {
    if (prev.size() != cur.size()) {
        throw std::invalid_argument("correlation of columns with different lengths");
    }
    // sign(rho) = sign(n Sxy - Sx Sy); a column is constant iff n Sxx - Sx^2 == 0.
    __int128 sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const __int128 x = prev[i];
        const __int128 y = cur[i];
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    const __int128 n = static_cast<__int128>(prev.size());
    if (n * sxx - sx * sx == 0 || n * syy - sy * sy == 0) {
        return 1;
    }
    return n * sxy - sx * sy < 0 ? -1 : 1;
}

std::vector<std::size_t> DepthGram::flagged() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) {
            out.push_back(i);
        }
    }
    return out;
}

__int128 depthgram_gap_scaled(std::uint64_t n, std::uint64_t m, std::uint64_t mbd, std::uint64_t mei) {
    const __int128 N = n;
    const __int128 M = m;
    const __int128 W = N * M - static_cast<__int128>(mei);  // n m (1 - MEI)
    const __int128 parabola = 4 * (N - 1) * M * M + 2 * (N - 1) * M * W - W * W;
    return 4 * M * static_cast<__int128>(mbd) - parabola;
}

DepthGram depthgram_points(Variant variant, std::size_t n, std::size_t m, std::vector<std::uint64_t> mei_of_mbd_rows,
                           std::vector<std::uint64_t> mbd_of_mei_rows) {
    if (n < 2) {
        throw std::invalid_argument("a DepthGram needs at least 2 observations");
    }
    if (mei_of_mbd_rows.size() != n || mbd_of_mei_rows.size() != n) {
        throw std::invalid_argument("second-level depth vectors must have one entry per observation");
    }
    DepthGram dg;
    dg.variant = variant;
    dg.n = n;
    dg.m = m;
    dg.mei_numerators = std::move(mei_of_mbd_rows);
    dg.mbd_numerators = std::move(mbd_of_mei_rows);
    dg.dg1.resize(n);
    dg.dg2.resize(n);
    dg.d_scores.resize(n);
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double mei_scale = nd * md;
    const double mbd_scale = static_cast<double>(pair_count(n)) * md;
    const double gap_scale = 2.0 * nd * (nd - 1.0) * md * md;
    for (std::size_t i = 0; i < n; ++i) {
        dg.dg1[i] = static_cast<double>(n * m - dg.mei_numerators[i]) / mei_scale;
        dg.dg2[i] = static_cast<double>(dg.mbd_numerators[i]) / mbd_scale;
        dg.d_scores[i] = static_cast<double>(depthgram_gap_scaled(n, m, dg.mbd_numerators[i], dg.mei_numerators[i])) /
                         gap_scale;
    }
    return dg;
}

DepthGram depthgram_points(Variant variant, const DepthMatrix& mbd_rows, const DepthMatrix& mei_rows) {
    if (mbd_rows.rows != mei_rows.rows || mbd_rows.cols != mei_rows.cols) {
        throw std::invalid_argument("MBD and MEI matrices differ in shape");
    }
    const std::size_t n = mbd_rows.rows;
    const std::size_t m = mbd_rows.cols;
    auto mei_second = mbd_mei_of_rows(mbd_rows.numerators, n, m).second;
    auto mbd_second = mbd_mei_of_rows(mei_rows.numerators, n, m).first;
    return depthgram_points(variant, n, m, std::move(mei_second.numerators), std::move(mbd_second.numerators));
}

void flag_outliers(DepthGram& dg, double F) {
    if (!(F > 0.0)) {
        throw std::invalid_argument("the boxplot factor F must be positive");
    }
    const double q1 = quantile(dg.d_scores, 0.25);
    const double q3 = quantile(dg.d_scores, 0.75);
    dg.F = F;
    dg.threshold = q3 + F * (q3 - q1);
    dg.flags.assign(dg.d_scores.size(), false);
    for (std::size_t i = 0; i < dg.d_scores.size(); ++i) {
        dg.flags[i] = dg.d_scores[i] > dg.threshold;
    }
}

DimensionResult compute_dimension(std::size_t j, std::span<const double> block, std::size_t n, std::size_t N,
                                  const StreamOptions& options, DimensionScratch& scratch) {
    if (block.size() != n * N) {
        throw std::invalid_argument("dimension " + std::to_string(j + 1) + " block has " + std::to_string(block.size()) +
                                    " values, expected " + std::to_string(n * N));
    }
    for (std::size_t idx = 0; idx < block.size(); ++idx) {
        if (!std::isfinite(block[idx])) {
            throw DataError("non-finite value at observation " + std::to_string(idx / N + 1) + ", dimension " +
                            std::to_string(j + 1) + ", time point " + std::to_string(idx % N + 1));
        }
    }

    DimensionResult r;
    r.dimension = j;
    r.pairs.resize(n * N);
    r.n_ge.resize(n * N);
    r.n_le.resize(n * N);
    r.mbd_col.assign(n, 0);
    r.mei_col.assign(n, 0);
    scratch.column.resize(n);

    for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            scratch.column[i] = block[i * N + k];
        }
        const std::size_t base = k * n;
        scratch.values.scan(std::span<const double>(scratch.column),
                            [&](std::uint32_t i, std::uint32_t le, std::uint32_t ge, std::uint32_t, std::uint64_t pairs) {
                                r.pairs[base + i] = static_cast<std::uint32_t>(pairs);
                                r.n_ge[base + i] = ge;
                                r.n_le[base + i] = le;
                                r.mbd_col[i] += pairs;
                                r.mei_col[i] += ge;
                            });
    }

    r.mbd_col_ge.resize(n);
    r.mei_col_pairs.resize(n);
    scratch.numerators.scan(std::span<const std::uint64_t>(r.mbd_col),
                            [&](std::uint32_t i, std::uint32_t, std::uint32_t ge, std::uint32_t, std::uint64_t) {
                                r.mbd_col_ge[i] = ge;
                            });
    scratch.numerators.scan(std::span<const std::uint64_t>(r.mei_col),
                            [&](std::uint32_t i, std::uint32_t, std::uint32_t, std::uint32_t, std::uint64_t pairs) {
                                r.mei_col_pairs[i] = pairs;
                            });

    if (options.marginal) {
        const DepthVector mbd_dv = make_depth_vector(DepthKind::mbd, n, N, r.mbd_col);
        const DepthVector mei_dv = make_depth_vector(DepthKind::mei, n, N, r.mei_col);
        r.magnitude_flags = functional_boxplot_dim(block, N, mbd_dv, options.F);
        r.shape_flags = outliergram_dim(mbd_dv, mei_dv, options.F);
    }
    return r;
}

void check_accumulator_capacity(std::size_t n, std::size_t p, std::size_t N) {
    // Per-column counts are stored as 32-bit values.
    if (pair_count(n) > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("n = " + std::to_string(n) + " exceeds the per-column counter range");
    }
    // Largest accumulated numerator: C(n,2) summed over max(p, N) columns, and the exact
    // second-level gap formulas square n * max(p, N).
    std::uint64_t widest = std::max<std::uint64_t>(p, N);
    std::uint64_t product = 0;
    if (__builtin_mul_overflow(static_cast<std::uint64_t>(pair_count(n)), widest, &product) ||
        __builtin_mul_overflow(static_cast<std::uint64_t>(n), widest, &product) || product > (1ull << 60)) {
        throw std::invalid_argument("dataset shape (n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                                    ", N=" + std::to_string(N) + ") overflows the 64-bit accumulators");
    }
}

namespace {

DepthMatrix make_matrix(DepthKind kind, std::size_t rows, std::size_t cols, std::size_t m) {
    DepthMatrix mat;
    mat.kind = kind;
    mat.rows = rows;
    mat.cols = cols;
    mat.m = m;
    mat.denominator = kind == DepthKind::mbd ? pair_count(rows) : rows;
    mat.numerators.assign(rows * cols, 0);
    return mat;
}

}  // namespace

StreamState::StreamState(std::size_t n, std::size_t p, std::size_t N, StreamOptions options)
    : n_(n), p_(p), N_(N), options_(options) {
    if (n < 2) {
        throw std::invalid_argument("at least 2 observations are required, got " + std::to_string(n));
    }
    if (p < 1 || N < 1) {
        throw std::invalid_argument("datasets need at least one dimension and one time point");
    }
    check_accumulator_capacity(n, p, N);
    matrices_.mbd_t = make_matrix(DepthKind::mbd, n, N, p);
    matrices_.mei_t = make_matrix(DepthKind::mei, n, N, p);
    matrices_.mei_t_flipped = make_matrix(DepthKind::mei, n, N, p);
    if (options_.keep_matrices) {
        matrices_.mbd_d = make_matrix(DepthKind::mbd, n, p, N);
        matrices_.mei_d = make_matrix(DepthKind::mei, n, p, N);
    }
    dim_mei_of_mbd_.assign(n, 0);
    dim_mbd_of_mei_.assign(n, 0);
    chain_.signs.reserve(p);
    if (options_.marginal) {
        marginal_ = MarginalFlags(n, p);
    }
}

void StreamState::accumulate_dimension(std::size_t j, std::span<const double> block) {
    if (j != next_) {
        throw std::invalid_argument("dimension " + std::to_string(j + 1) + " arrived out of order, expected " +
                                    std::to_string(next_ + 1));
    }
    commit(compute_dimension(j, block, n_, N_, options_, scratch_));
}

void StreamState::commit(DimensionResult r) {
    if (r.dimension != next_) {
        throw std::invalid_argument("dimension " + std::to_string(r.dimension + 1) + " arrived out of order, expected " +
                                    std::to_string(next_ + 1));
    }
    if (next_ >= p_) {
        throw std::invalid_argument("all " + std::to_string(p_) + " dimensions were already committed");
    }
    if (r.pairs.size() != n_ * N_ || r.mei_col.size() != n_) {
        throw std::invalid_argument("dimension result does not match the stream shape");
    }

    int sign = 1;
    if (next_ > 0) {
        const int step = correlation_sign(std::span<const std::uint64_t>(previous_mei_col_),
                                          std::span<const std::uint64_t>(r.mei_col));
        chain_.negative_steps += step < 0;
        sign = chain_.signs.back() * step;
    }
    chain_.signs.push_back(static_cast<std::int8_t>(sign));

    auto& mbd_t = matrices_.mbd_t.numerators;
    auto& mei_t = matrices_.mei_t.numerators;
    auto& mei_tc = matrices_.mei_t_flipped.numerators;
    const auto& flipped_counts = sign > 0 ? r.n_ge : r.n_le;
    for (std::size_t idx = 0; idx < mbd_t.size(); ++idx) {
        mbd_t[idx] += r.pairs[idx];
        mei_t[idx] += r.n_ge[idx];
        mei_tc[idx] += flipped_counts[idx];
    }
    for (std::size_t i = 0; i < n_; ++i) {
        dim_mei_of_mbd_[i] += r.mbd_col_ge[i];
        dim_mbd_of_mei_[i] += r.mei_col_pairs[i];
    }
    if (options_.keep_matrices) {
        std::copy(r.mbd_col.begin(), r.mbd_col.end(), matrices_.mbd_d.numerators.begin() + next_ * n_);
        std::copy(r.mei_col.begin(), r.mei_col.end(), matrices_.mei_d.numerators.begin() + next_ * n_);
    }
    if (options_.marginal) {
        marginal_.add_dimension(next_, r.magnitude_flags, r.shape_flags);
    }
    previous_mei_col_ = std::move(r.mei_col);
    ++next_;
}

void StreamState::require_complete() const {
    if (!complete()) {
        throw std::logic_error("stream incomplete: " + std::to_string(next_) + " of " + std::to_string(p_) +
                               " dimensions committed");
    }
}

DepthGram StreamState::dimensions_depthgram() const {
    require_complete();
    return depthgram_points(Variant::dimensions, n_, p_, dim_mei_of_mbd_, dim_mbd_of_mei_);
}

DepthGram StreamState::time_depthgram() const {
    require_complete();
    return depthgram_points(Variant::time, matrices_.mbd_t, matrices_.mei_t);
}

DepthGram StreamState::time_correlation_depthgram() const {
    require_complete();
    return depthgram_points(Variant::time_correlation, matrices_.mbd_t, matrices_.mei_t_flipped);
}

std::vector<Variant> AnalysisReport::provenance(std::size_t i) const {
    std::vector<Variant> out;
    for (const auto& dg : depthgrams) {
        if (i < dg.flags.size() && dg.flags[i]) {
            out.push_back(dg.variant);
        }
    }
    return out;
}

AnalysisReport assemble_report(const StreamState& state, double F) {
    AnalysisReport report;
    report.n = state.observations();
    report.p = state.dimensions();
    report.N = state.time_points();
    report.F = F;
    report.depthgrams = {state.dimensions_depthgram(), state.time_depthgram(), state.time_correlation_depthgram()};
    for (auto& dg : report.depthgrams) {
        flag_outliers(dg, F);
    }
    for (std::size_t i = 0; i < report.n; ++i) {
        if (!report.provenance(i).empty()) {
            report.outliers.push_back(i);
        }
    }
    report.flipped_dimensions = state.sign_chain().flipped_dimensions();
    report.negative_steps = state.sign_chain().negative_steps;
    return report;
}

AnalysisReport analyze(const DimensionSource& source, const AnalysisConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t n = source.observations();
    const std::size_t p = source.dimensions();
    const std::size_t N = source.time_points();

    StreamOptions options;
    options.keep_matrices = config.emit_matrices;
    options.marginal = config.run_marginal;
    options.F = config.F;
    StreamState state(n, p, N, options);

    const std::size_t threads = std::max<std::size_t>(1, config.threads);
    const std::size_t batch = std::min<std::size_t>(p, std::max<std::size_t>(32, 8 * threads));
    std::vector<DimensionResult> results(batch);
    std::vector<DimensionScratch> scratch(threads);
    std::vector<std::vector<double>> blocks(threads, std::vector<double>(n * N));

    for (std::size_t start = 0; start < p; start += batch) {
        const std::size_t count = std::min(batch, p - start);
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto work = [&](std::size_t worker) {
            try {
                for (std::size_t q = cursor++; q < count; q = cursor++) {
                    const std::size_t j = start + q;
                    source.read_dimension(j, blocks[worker]);
                    results[q] = compute_dimension(j, blocks[worker], n, N, options, scratch[worker]);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                cursor = count;
            }
        };

        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 1; w < std::min(threads, count); ++w) {
                pool.emplace_back(work, w);
            }
            work(0);
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (std::size_t q = 0; q < count; ++q) {
            state.commit(std::move(results[q]));
        }
    }

    AnalysisReport report = assemble_report(state, config.F);
    if (config.run_marginal) {
        report.marginal = state.marginal_flags();
    }
    if (config.emit_matrices) {
        report.matrices = state.matrices();
    }
    report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace depthgram
