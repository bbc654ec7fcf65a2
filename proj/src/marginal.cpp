#include "depthgram/marginal.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace depthgram {

MarginalFlags::MarginalFlags(std::size_t n, std::size_t p)
    : magnitude_dims(n), shape_dims(n), magnitude_count(p, 0), shape_count(p, 0) {}

void MarginalFlags::add_dimension(std::size_t j, std::span<const std::uint8_t> magnitude,
                                  std::span<const std::uint8_t> shape) {
    if (j >= dimensions() || magnitude.size() != observations() || shape.size() != observations()) {
        throw std::invalid_argument("marginal flags do not match the screen shape");
    }
    const auto dim = static_cast<std::uint32_t>(j);
    for (std::size_t i = 0; i < observations(); ++i) {
        if (magnitude[i]) {
            magnitude_dims[i].push_back(dim);
            ++magnitude_count[j];
        }
        if (shape[i]) {
            shape_dims[i].push_back(dim);
            ++shape_count[j];
        }
    }
}

std::vector<std::uint8_t> functional_boxplot_dim(std::span<const double> curves, std::size_t N,
                                                 const DepthVector& mbd_col, double F) {
    const std::size_t n = mbd_col.size();
    if (n < 2 || curves.size() != n * N) {
        throw std::invalid_argument("functional boxplot needs n >= 2 curves of length N");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mbd_col.numerators[a] > mbd_col.numerators[b];
    });
    const std::size_t central = (n + 1) / 2;

    std::vector<double> lower(N, 0.0), upper(N, 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        double lo = curves[order[0] * N + k];
        double hi = lo;
        for (std::size_t r = 1; r < central; ++r) {
            const double v = curves[order[r] * N + k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double spread = F * (hi - lo);
        lower[k] = lo - spread;
        upper[k] = hi + spread;
    }

    std::vector<std::uint8_t> flags(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < N; ++k) {
            const double v = curves[i * N + k];
            if (v < lower[k] || v > upper[k]) {
                flags[i] = 1;
                break;
            }
        }
    }
    return flags;
}

std::vector<std::uint8_t> outliergram_dim(const DepthVector& mbd_col, const DepthVector& mei_col, double F) {
    const std::vector<double> gaps = outliergram_gaps(mbd_col, mei_col);
    const double q1 = quantile(gaps, 0.25);
    const double q3 = quantile(gaps, 0.75);
    const double threshold = q3 + F * (q3 - q1);
    std::vector<std::uint8_t> flags(gaps.size(), 0);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        flags[i] = gaps[i] > threshold;
    }
    return flags;
}

MarginalFlags marginal_screen(const DimensionSource& source, double F, std::size_t threads) {
    const std::size_t n = source.observations();
    const std::size_t p = source.dimensions();
    const std::size_t N = source.time_points();
    if (n < 2) {
        throw std::invalid_argument("marginal screening needs at least 2 observations");
    }
    MarginalFlags out(n, p);
    threads = std::max<std::size_t>(1, threads);
    const std::size_t batch = std::min<std::size_t>(p, std::max<std::size_t>(32, 8 * threads));
    std::vector<std::vector<std::uint8_t>> magnitude(batch), shape(batch);

    for (std::size_t start = 0; start < p; start += batch) {
        const std::size_t count = std::min(batch, p - start);
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto work = [&]() {
            try {
                std::vector<double> block(n * N);
                for (std::size_t q = cursor++; q < count; q = cursor++) {
                    source.read_dimension(start + q, block);
                    const FunctionalSample sample(n, N, block);
                    const auto [mbd_col, mei_col] = mbd_mei(sample);
                    magnitude[q] = functional_boxplot_dim(block, N, mbd_col, F);
                    shape[q] = outliergram_dim(mbd_col, mei_col, F);
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
                pool.emplace_back(work);
            }
            work();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (std::size_t q = 0; q < count; ++q) {
            out.add_dimension(start + q, magnitude[q], shape[q]);
        }
    }
    return out;
}

}  // namespace depthgram
