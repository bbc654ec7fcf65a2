#include "depthgram/depth_core.hpp"

#include <cmath>
#include <string>

namespace depthgram {

FunctionalSample::FunctionalSample(std::size_t n, std::size_t m, std::vector<double> values)
    : n_(n), m_(m), values_(std::move(values)) {
    if (n_ < 2) {
        throw std::invalid_argument("functional sample needs at least 2 curves, got " + std::to_string(n_));
    }
    if (m_ < 1) {
        throw std::invalid_argument("functional sample needs at least 1 evaluation point");
    }
    if (values_.size() != n_ * m_) {
        throw std::invalid_argument("functional sample expects " + std::to_string(n_ * m_) + " values, got " +
                                    std::to_string(values_.size()));
    }
    for (std::size_t idx = 0; idx < values_.size(); ++idx) {
        if (!std::isfinite(values_[idx])) {
            throw std::invalid_argument("non-finite value at curve " + std::to_string(idx / m_) + ", point " +
                                        std::to_string(idx % m_));
        }
    }
}

FunctionalSample FunctionalSample::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t m = rows.empty() ? 0 : rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m) {
            throw std::invalid_argument("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                        " entries, expected " + std::to_string(m));
        }
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    return FunctionalSample(rows.size(), m, std::move(values));
}

void FunctionalSample::column(std::size_t k, std::span<double> out) const {
    for (std::size_t i = 0; i < n_; ++i) {
        out[i] = values_[i * m_ + k];
    }
}

std::vector<PointCounts> pointwise_counts(std::span<const double> column) {
    if (column.size() < 2) {
        throw std::invalid_argument("pointwise counts need at least 2 values");
    }
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (!std::isfinite(column[i])) {
            throw std::invalid_argument("non-finite value at index " + std::to_string(i));
        }
    }
    std::vector<PointCounts> out(column.size());
    ColumnRanker<double> ranker;
    ranker.count(column, out);
    return out;
}

void DepthVector::finalize() {
    values.resize(numerators.size());
    const double scale = static_cast<double>(denominator) * static_cast<double>(m);
    for (std::size_t i = 0; i < numerators.size(); ++i) {
        values[i] = static_cast<double>(numerators[i]) / scale;
    }
}

DepthVector make_depth_vector(DepthKind kind, std::size_t n, std::size_t m, std::vector<std::uint64_t> numerators) {
    DepthVector out;
    out.kind = kind;
    out.m = m;
    out.denominator = kind == DepthKind::mbd ? pair_count(n) : n;
    out.numerators = std::move(numerators);
    out.finalize();
    return out;
}

std::pair<DepthVector, DepthVector> mbd_mei(const FunctionalSample& sample) {
    const std::size_t n = sample.n();
    const std::size_t m = sample.m();
    std::vector<std::uint64_t> pairs(n, 0);
    std::vector<std::uint64_t> ge(n, 0);
    std::vector<double> column(n);
    ColumnRanker<double> ranker;
    for (std::size_t k = 0; k < m; ++k) {
        sample.column(k, column);
        ranker.scan(std::span<const double>(column),
                    [&](std::uint32_t i, std::uint32_t, std::uint32_t n_ge, std::uint32_t, std::uint64_t p) {
                        pairs[i] += p;
                        ge[i] += n_ge;
                    });
    }
    return {make_depth_vector(DepthKind::mbd, n, m, std::move(pairs)),
            make_depth_vector(DepthKind::mei, n, m, std::move(ge))};
}

DepthVector mbd(const FunctionalSample& sample) { return mbd_mei(sample).first; }

DepthVector mei(const FunctionalSample& sample) { return mbd_mei(sample).second; }

std::pair<DepthVector, DepthVector> mbd_mei_of_rows(std::span<const std::uint64_t> data, std::size_t rows,
                                                    std::size_t cols) {
    if (rows < 2) {
        throw std::invalid_argument("depth of rows needs at least 2 rows");
    }
    if (data.size() != rows * cols) {
        throw std::invalid_argument("matrix data does not match its shape");
    }
    std::vector<std::uint64_t> pairs(rows, 0);
    std::vector<std::uint64_t> ge(rows, 0);
    ColumnRanker<std::uint64_t> ranker;
    for (std::size_t k = 0; k < cols; ++k) {
        ranker.scan(data.subspan(k * rows, rows),
                    [&](std::uint32_t i, std::uint32_t, std::uint32_t n_ge, std::uint32_t, std::uint64_t p) {
                        pairs[i] += p;
                        ge[i] += n_ge;
                    });
    }
    return {make_depth_vector(DepthKind::mbd, rows, cols, std::move(pairs)),
            make_depth_vector(DepthKind::mei, rows, cols, std::move(ge))};
}

namespace {

void require_sample_size(std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument("parabola needs n >= 2, got " + std::to_string(n));
    }
}

}  // namespace

double parabola_f(std::size_t n, double z) {
    require_sample_size(n);
    const double nd = static_cast<double>(n);
    const double a0 = -2.0 / (nd * (nd - 1.0));
    const double a1 = 2.0 * (nd + 1.0) / (nd - 1.0);
    return a0 + a1 * z + a0 * nd * nd * z * z;
}

double parabola_g(std::size_t n, double z) {
    require_sample_size(n);
    const double nd = static_cast<double>(n);
    return 2.0 / nd + z - nd * z * z / (2.0 * (nd - 1.0));
}

__int128 outliergram_gap_scaled(std::uint64_t n, std::uint64_t m, std::uint64_t pairs, std::uint64_t ge) {
    // C(n,2) m^2 f_n(ge / (n m)) = (n+1) ge m - m^2 - ge^2
    const __int128 N = n;
    const __int128 M = m;
    const __int128 G = ge;
    return (N + 1) * G * M - M * M - G * G - M * static_cast<__int128>(pairs);
}

std::vector<double> outliergram_gaps(const DepthVector& mbd_values, const DepthVector& mei_values) {
    const std::size_t n = mbd_values.size();
    if (mei_values.size() != n || mbd_values.m != mei_values.m) {
        throw std::invalid_argument("MBD and MEI vectors come from different samples");
    }
    const double scale = static_cast<double>(pair_count(n)) * static_cast<double>(mbd_values.m) *
                         static_cast<double>(mbd_values.m);
    std::vector<double> gaps(n);
    for (std::size_t i = 0; i < n; ++i) {
        const __int128 gap = outliergram_gap_scaled(n, mbd_values.m, mbd_values.numerators[i], mei_values.numerators[i]);
        gaps[i] = static_cast<double>(gap) / scale;
    }
    return gaps;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::invalid_argument("quantile level must lie in [0, 1]");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace depthgram
