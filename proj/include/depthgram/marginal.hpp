#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "depthgram/dataset.hpp"
#include "depthgram/depth_core.hpp"

/**
 * @file marginal.hpp
 *
 * @brief Per-dimension magnitude (functional boxplot) and shape (outliergram) screening.
 *
 * Both screens reuse the MBD/MEI columns of the marginal sample, so they can
 * run inside the DepthGram pass at no extra sorting cost.
 */

namespace depthgram {

/**
 * @brief Per-observation lists of dimensions flagged by each screen.
 *
 * Dimension indices are 0-based and sorted; serializers add one.
 */
struct MarginalFlags {
    std::vector<std::vector<std::uint32_t>> magnitude_dims;
    std::vector<std::vector<std::uint32_t>> shape_dims;
    std::vector<std::uint32_t> magnitude_count;  ///< per dimension
    std::vector<std::uint32_t> shape_count;      ///< per dimension

    MarginalFlags() = default;
    MarginalFlags(std::size_t n, std::size_t p);

    /// Records the flags of dimension `j`; dimensions must arrive in increasing order.
    void add_dimension(std::size_t j, std::span<const std::uint8_t> magnitude, std::span<const std::uint8_t> shape);

    std::size_t observations() const { return magnitude_dims.size(); }
    std::size_t dimensions() const { return magnitude_count.size(); }
};

/**
 * @brief Functional boxplot flags for one marginal.
 *
 * The central region is the pointwise envelope of the ceil(n/2) curves with
 * the highest MBD (ties go to the lower observation index). Fences sit
 * F times the envelope height beyond it; a curve is flagged when it leaves
 * the fences at one or more grid points.
 *
 * `curves` is row-major n x N.
 */
std::vector<std::uint8_t> functional_boxplot_dim(std::span<const double> curves, std::size_t N,
                                                 const DepthVector& mbd_col, double F = 1.5);

/// Outliergram flags: d_i = f_n(MEI_i) - MBD_i, flagged when d_i > Q3(d) + F IQR(d).
std::vector<std::uint8_t> outliergram_dim(const DepthVector& mbd_col, const DepthVector& mei_col, double F = 1.5);

/// Streams every dimension of `source` through both screens.
MarginalFlags marginal_screen(const DimensionSource& source, double F = 1.5, std::size_t threads = 1);

}  // namespace depthgram
