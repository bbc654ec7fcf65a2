#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

/**
 * @file depth_core.hpp
 *
 * @brief Rank-based modified band depth (MBD) and modified epigraph index (MEI).
 *
 * Both quantities are computed from a single sort per evaluation point. Every
 * result keeps its exact integer numerator next to the floating-point value so
 * that comparisons between depths sharing a denominator are exact.
 */

namespace depthgram {

/// Number of unordered pairs that can be formed from `n` items.
constexpr std::uint64_t pair_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/**
 * @brief A sample of `n` curves observed on a common grid of `m` points.
 *
 * Values are stored row-major: row `i` is curve `i`. Construction rejects
 * non-finite values and samples with fewer than two curves.
 */
class FunctionalSample {
public:
    FunctionalSample(std::size_t n, std::size_t m, std::vector<double> values);

    static FunctionalSample from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * m_, m_}; }
    double operator()(std::size_t i, std::size_t k) const { return values_[i * m_ + k]; }
    const std::vector<double>& values() const { return values_; }

    /// Copies column `k` (one value per curve) into `out`.
    void column(std::size_t k, std::span<double> out) const;

private:
    std::size_t n_;
    std::size_t m_;
    std::vector<double> values_;
};

/**
 * @brief Rank counts of one element within the column it belongs to.
 *
 * `n_le` and `n_ge` include the element itself. `pairs_containing` is the
 * number of unordered pairs of column entries whose closed interval
 * [min, max] covers the element.
 */
struct PointCounts {
    std::uint32_t n_le = 0;
    std::uint32_t n_ge = 0;
    std::uint32_t equal = 0;
    std::uint64_t pairs_containing = 0;
};

/// Pairs covering an element given its tie-group counts; symmetric in (n_le, n_ge).
constexpr std::uint64_t pairs_covering(std::uint64_t n_le, std::uint64_t n_ge, std::uint64_t equal) {
    const std::uint64_t below = n_le - equal;
    const std::uint64_t above = n_ge - equal;
    return pair_count(equal) + equal * below + equal * above + below * above;
}

/**
 * @brief Reusable sort-and-scan kernel computing PointCounts for a column.
 *
 * Holds its scratch buffer across calls, so one instance per thread avoids
 * reallocating in hot loops. Values must be totally ordered (no NaN).
 */
template <class T>
class ColumnRanker {
public:
    /// Calls `sink(index, n_le, n_ge, equal, pairs)` once per element of `column`.
    template <class Sink>
    void scan(std::span<const T> column, Sink&& sink) {
        const std::size_t n = column.size();
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            order_[i] = Entry{column[i], static_cast<std::uint32_t>(i)};
        }
        std::sort(order_.begin(), order_.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

        std::size_t start = 0;
        while (start < n) {
            std::size_t stop = start + 1;
            while (stop < n && !(order_[start].value < order_[stop].value)) {
                ++stop;
            }
            const auto equal = static_cast<std::uint32_t>(stop - start);
            const auto n_le = static_cast<std::uint32_t>(stop);
            const auto n_ge = static_cast<std::uint32_t>(n - start);
            const std::uint64_t pairs = pairs_covering(n_le, n_ge, equal);
            for (std::size_t s = start; s < stop; ++s) {
                sink(order_[s].index, n_le, n_ge, equal, pairs);
            }
            start = stop;
        }
    }

    void count(std::span<const T> column, std::span<PointCounts> out) {
        scan(column, [&](std::uint32_t i, std::uint32_t le, std::uint32_t ge, std::uint32_t eq, std::uint64_t pairs) {
            out[i] = PointCounts{le, ge, eq, pairs};
        });
    }

private:
    struct Entry {
        T value;
        std::uint32_t index;
    };
    std::vector<Entry> order_;
};

/// Point counts for one column of reals. Throws std::invalid_argument on n < 2 or non-finite input.
std::vector<PointCounts> pointwise_counts(std::span<const double> column);

enum class DepthKind { mbd, mei };

/**
 * @brief Per-curve MBD or MEI values with their exact rational representation.
 *
 * `values[i] == numerators[i] / (denominator * m)`. The denominator is
 * C(n,2) for MBD and n for MEI.
 */
struct DepthVector {
    DepthKind kind = DepthKind::mbd;
    std::size_t m = 0;
    std::uint64_t denominator = 0;
    std::vector<std::uint64_t> numerators;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    /// Rebuilds `values` from the numerators.
    void finalize();
};

DepthVector make_depth_vector(DepthKind kind, std::size_t n, std::size_t m, std::vector<std::uint64_t> numerators);

DepthVector mbd(const FunctionalSample& sample);
DepthVector mei(const FunctionalSample& sample);

/// MBD and MEI from one pass over the columns.
std::pair<DepthVector, DepthVector> mbd_mei(const FunctionalSample& sample);

/**
 * @brief MBD and MEI over the rows of an integer matrix stored column-major.
 *
 * `data[k * rows + i]` is entry (i, k). Used for depths of depths, where the
 * rows are exact numerators of first-level depths sharing one denominator.
 */
std::pair<DepthVector, DepthVector> mbd_mei_of_rows(std::span<const std::uint64_t> data, std::size_t rows,
                                                    std::size_t cols);

/// f_n(z) = a0 + a1 z + a2 n^2 z^2 with a0 = a2 = -2/(n(n-1)), a1 = 2(n+1)/(n-1).
double parabola_f(std::size_t n, double z);

/// g_n(z) = 2/n + z - n z^2 / (2(n-1)).
double parabola_g(std::size_t n, double z);

/**
 * @brief Exact scaled gap f_n(MEI) - MBD for one curve.
 *
 * With MBD = pairs / (C(n,2) m) and MEI = ge / (n m), returns
 * C(n,2) m^2 (f_n(MEI) - MBD) as an integer. The value is zero exactly when
 * the curve attains the parabola and is never negative.
 */
__int128 outliergram_gap_scaled(std::uint64_t n, std::uint64_t m, std::uint64_t pairs, std::uint64_t ge);

/// f_n(MEI_i) - MBD_i for every curve, computed through the exact integer gap.
std::vector<double> outliergram_gaps(const DepthVector& mbd_values, const DepthVector& mei_values);

/// Sample quantile with linear interpolation between order statistics at h = (m-1) q.
double quantile(std::span<const double> values, double q);

}  // namespace depthgram
