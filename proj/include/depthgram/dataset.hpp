#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthgram {

/// Malformed, truncated or unreadable data. Distinct from caller mistakes (std::invalid_argument).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computed result violated an invariant that the algorithms guarantee.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/**
 * @brief Random-access view of an n x p x N dataset, one dimension at a time.
 *
 * A dimension block holds the n curves of one marginal, row-major:
 * `block[i * N + k]` is observation i at time point k. Implementations must
 * allow concurrent `read_dimension` calls for distinct dimensions.
 */
class DimensionSource {
public:
    virtual ~DimensionSource() = default;

    virtual std::size_t observations() const = 0;
    virtual std::size_t dimensions() const = 0;
    virtual std::size_t time_points() const = 0;

    /// Evaluation grid; empty when the dataset does not carry one.
    virtual std::span<const double> time_grid() const { return {}; }

    /// Fills `out` (size n * N) with dimension `j` (0-based).
    virtual void read_dimension(std::size_t j, std::span<double> out) const = 0;

    std::size_t block_size() const { return observations() * time_points(); }
};

/// A dataset held fully in memory, dimension-major.
class InMemoryDataset final : public DimensionSource {
public:
    InMemoryDataset(std::size_t n, std::size_t p, std::size_t N, std::vector<double> values,
                    std::vector<double> grid = {});

    /// Copies every dimension of `source` into memory.
    static InMemoryDataset materialize(const DimensionSource& source);

    std::size_t observations() const override { return n_; }
    std::size_t dimensions() const override { return p_; }
    std::size_t time_points() const override { return N_; }
    std::span<const double> time_grid() const override { return grid_; }
    void read_dimension(std::size_t j, std::span<double> out) const override;

    double& at(std::size_t i, std::size_t j, std::size_t k) { return values_[(j * n_ + i) * N_ + k]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[(j * n_ + i) * N_ + k]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t n_;
    std::size_t p_;
    std::size_t N_;
    std::vector<double> values_;
    std::vector<double> grid_;
};

}  // namespace depthgram
