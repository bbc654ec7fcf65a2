#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "depthgram/engine.hpp"
#include "depthgram/io_formats.hpp"
#include "depthgram/synth.hpp"

// Static SVG scatter plots of DepthGram points. Both axes are always [0, 1].

namespace depthgram {

struct PlotSpec {
    std::size_t panel_width = 360;
    std::size_t panel_height = 360;
    std::size_t margin = 48;
    bool overlay_parabola = true;
    std::size_t parabola_samples = 200;
    /// Fill colors for typical, magnitude, shape and joint observations.
    std::array<std::string, 4> colors = {"#9e9e9e", "#2e7d32", "#1f4fbf", "#e4572e"};
};

/// Points (z, g_n(z)) on an even grid of z in [0, 1].
std::vector<std::pair<double, double>> parabola_polyline(std::size_t n, std::size_t samples);

/**
 * @brief Renders one panel per variant present in `rows`.
 *
 * `classes[i]` colors observation i + 1; observations without a class are
 * drawn as typical. Flagged points get a dark outline. Throws DataError when
 * there is nothing to draw.
 */
std::string render_svg(std::span<const DepthgramCsvRow> rows, std::span<const OutlierType> classes,
                       const PlotSpec& spec = {});

}  // namespace depthgram
