#include "depthgram/dataset.hpp"

#include <algorithm>
#include <string>

namespace depthgram {

InMemoryDataset::InMemoryDataset(std::size_t n, std::size_t p, std::size_t N, std::vector<double> values,
                                 std::vector<double> grid)
    : n_(n), p_(p), N_(N), values_(std::move(values)), grid_(std::move(grid)) {
    if (n == 0 || p == 0 || N == 0) {
        throw std::invalid_argument("dataset dimensions must be positive");
    }
    if (values_.size() != n * p * N) {
        throw std::invalid_argument("dataset holds " + std::to_string(values_.size()) + " values, expected " +
                                    std::to_string(n * p * N));
    }
    if (!grid_.empty() && grid_.size() != N) {
        throw std::invalid_argument("time grid length does not match N");
    }
}

InMemoryDataset InMemoryDataset::materialize(const DimensionSource& source) {
    const std::size_t n = source.observations();
    const std::size_t p = source.dimensions();
    const std::size_t N = source.time_points();
    std::vector<double> values(n * p * N);
    for (std::size_t j = 0; j < p; ++j) {
        source.read_dimension(j, std::span<double>(values.data() + j * n * N, n * N));
    }
    const auto grid = source.time_grid();
    return InMemoryDataset(n, p, N, std::move(values), std::vector<double>(grid.begin(), grid.end()));
}

void InMemoryDataset::read_dimension(std::size_t j, std::span<double> out) const {
    if (j >= p_) {
        throw std::out_of_range("dimension " + std::to_string(j) + " out of range");
    }
    if (out.size() != n_ * N_) {
        throw std::invalid_argument("dimension buffer has the wrong size");
    }
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(j * n_ * N_);
    std::copy(first, first + static_cast<std::ptrdiff_t>(n_ * N_), out.begin());
}

}  // namespace depthgram
