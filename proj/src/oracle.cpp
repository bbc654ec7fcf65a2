#include "depthgram/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "depthgram/random.hpp"

namespace depthgram::oracle {

DepthVector mbd_brute(const FunctionalSample& sample) {
    const std::size_t n = sample.n();
    const std::size_t m = sample.m();
    std::vector<std::uint64_t> inside(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                for (std::size_t k = 0; k < m; ++k) {
                    const double lo = std::min(sample(a, k), sample(b, k));
                    const double hi = std::max(sample(a, k), sample(b, k));
                    if (lo <= sample(x, k) && sample(x, k) <= hi) {
                        ++inside[x];
                    }
                }
            }
        }
    }
    return make_depth_vector(DepthKind::mbd, n, m, std::move(inside));
}

DepthVector mei_brute(const FunctionalSample& sample) {
    const std::size_t n = sample.n();
    const std::size_t m = sample.m();
    std::vector<std::uint64_t> above(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t other = 0; other < n; ++other) {
            for (std::size_t k = 0; k < m; ++k) {
                if (sample(other, k) >= sample(x, k)) {
                    ++above[x];
                }
            }
        }
    }
    return make_depth_vector(DepthKind::mei, n, m, std::move(above));
}

std::vector<PointCounts> pointwise_counts_brute(std::span<const double> column) {
    const std::size_t n = column.size();
    std::vector<PointCounts> out(n);
    for (std::size_t x = 0; x < n; ++x) {
        PointCounts& c = out[x];
        for (std::size_t other = 0; other < n; ++other) {
            c.n_le += column[other] <= column[x];
            c.n_ge += column[other] >= column[x];
            c.equal += column[other] == column[x];
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                const double lo = std::min(column[a], column[b]);
                const double hi = std::max(column[a], column[b]);
                c.pairs_containing += lo <= column[x] && column[x] <= hi;
            }
        }
    }
    return out;
}

FunctionalSample random_tied_sample(std::size_t n, std::size_t m, std::uint64_t seed, std::uint64_t trial) {
    CounterStream rng(seed, StreamTag::oracle, static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32));
    // Coarse lattices make pointwise ties common; the widest one mostly avoids them.
    const std::uint64_t levels = 2 + rng.next_below(12);
    std::vector<double> values(n * m);
    for (auto& v : values) {
        v = static_cast<double>(rng.next_below(levels)) * 0.5 - 1.0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (rng.next_below(5) == 0) {
            const std::size_t source = rng.next_below(i);
            std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(source * m), m,
                        values.begin() + static_cast<std::ptrdiff_t>(i * m));
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (rng.next_below(8) == 0) {
            for (std::size_t i = 0; i < n; ++i) {
                values[i * m + k] = 0.25;
            }
        }
    }
    return FunctionalSample(n, m, std::move(values));
}

OracleCheckResult run_oracle_check(std::size_t max_n, std::size_t max_m, std::size_t trials, std::uint64_t seed,
                                   double tolerance) {
    if (max_n < 2 || max_m < 1) {
        throw std::invalid_argument("oracle check needs n >= 2 and m >= 1");
    }
    CounterStream sizes(seed, StreamTag::oracle, 0xffffffffu, 0);
    OracleCheckResult result;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + sizes.next_below(max_n - 1);
        const std::size_t m = 1 + sizes.next_below(max_m);
        const FunctionalSample sample = random_tied_sample(n, m, seed, t);
        const auto [fast_mbd, fast_mei] = mbd_mei(sample);
        const DepthVector slow_mbd = mbd_brute(sample);
        const DepthVector slow_mei = mei_brute(sample);
        bool mismatch = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double e1 = std::abs(fast_mbd[i] - slow_mbd[i]);
            const double e2 = std::abs(fast_mei[i] - slow_mei[i]);
            result.max_abs_error = std::max({result.max_abs_error, e1, e2});
            mismatch = mismatch || e1 > tolerance || e2 > tolerance;
        }
        result.mismatches += mismatch;
        ++result.trials;
    }
    return result;
}

}  // namespace depthgram::oracle
