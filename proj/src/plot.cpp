#include "depthgram/plot.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "depthgram/depth_core.hpp"

namespace depthgram {

std::vector<std::pair<double, double>> parabola_polyline(std::size_t n, std::size_t samples) {
    if (samples < 2) {
        throw std::invalid_argument("parabola needs at least 2 samples");
    }
    std::vector<std::pair<double, double>> points(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const double z = static_cast<double>(s) / static_cast<double>(samples - 1);
        points[s] = {z, parabola_g(n, z)};
    }
    return points;
}

namespace {

struct Panel {
    double left;
    double top;
    double width;
    double height;

    double x(double v) const { return left + std::clamp(v, 0.0, 1.0) * width; }
    double y(double v) const { return top + (1.0 - std::clamp(v, 0.0, 1.0)) * height; }
};

std::string_view axis_label(Variant v, bool horizontal) {
    switch (v) {
        case Variant::dimensions: return horizontal ? "1 - MEI(MBD_d)" : "MBD(MEI_d)";
        case Variant::time: return horizontal ? "1 - MEI(MBD_t)" : "MBD(MEI_t)";
        case Variant::time_correlation: return horizontal ? "1 - MEI(MBD_t), corrected" : "MBD(MEI_t), corrected";
    }
    return "";
}

}  // namespace

std::string render_svg(std::span<const DepthgramCsvRow> rows, std::span<const OutlierType> classes,
                       const PlotSpec& spec) {
    if (rows.empty()) {
        throw DataError("no DepthGram points to plot");
    }
    std::vector<Variant> variants;
    std::set<std::size_t> observations;
    for (const auto& row : rows) {
        if (std::find(variants.begin(), variants.end(), row.variant) == variants.end()) {
            variants.push_back(row.variant);
        }
        observations.insert(row.observation);
    }
    std::sort(variants.begin(), variants.end());
    const std::size_t n = observations.size();

    const double w = static_cast<double>(spec.panel_width);
    const double h = static_cast<double>(spec.panel_height);
    const double m = static_cast<double>(spec.margin);
    const double legend_height = 28.0;
    const double total_width = static_cast<double>(variants.size()) * (w + 2 * m);
    const double total_height = h + 2 * m + legend_height;

    std::string svg = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        total_width, total_height);

    for (std::size_t v = 0; v < variants.size(); ++v) {
        const Panel panel{static_cast<double>(v) * (w + 2 * m) + m, m, w, h};
        svg += fmt::format("<g class=\"panel\" data-variant=\"{}\">\n", variant_name(variants[v]));
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                           panel.left + w / 2, m / 2, variant_name(variants[v]));
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                           panel.left, panel.top, w, h);
        for (int tick = 0; tick <= 4; ++tick) {
            const double t = tick / 4.0;
            svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", panel.x(t),
                               panel.top + h + 16, t);
            svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", panel.left - 4,
                               panel.y(t) + 4, t);
        }
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", panel.left + w / 2,
                           panel.top + h + 32, axis_label(variants[v], true));
        svg += fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">{2}</text>\n",
                           panel.left - 32, panel.top + h / 2, axis_label(variants[v], false));

        if (spec.overlay_parabola && n >= 2) {
            svg += "<polyline class=\"parabola\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"4 3\" points=\"";
            for (const auto& [z, g] : parabola_polyline(n, spec.parabola_samples)) {
                svg += fmt::format("{:.3f},{:.3f} ", panel.x(z), panel.y(g));
            }
            svg += "\"/>\n";
        }

        // Typical points first so outliers stay visible on top.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& row : rows) {
                if (row.variant != variants[v]) {
                    continue;
                }
                const OutlierType cls =
                    row.observation - 1 < classes.size() ? classes[row.observation - 1] : OutlierType::typical;
                if ((cls == OutlierType::typical) != (pass == 0)) {
                    continue;
                }
                svg += fmt::format(
                    "<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{}\" fill=\"{}\" stroke=\"{}\" data-observation=\"{}\"/>\n",
                    panel.x(row.dg1), panel.y(row.dg2), row.flagged ? 4.5 : 3.5,
                    spec.colors[static_cast<std::size_t>(cls)], row.flagged ? "black" : "none", row.observation);
            }
        }
        svg += "</g>\n";
    }

    double x = m;
    const double y = total_height - legend_height / 2;
    svg += "<g class=\"legend\">\n";
    for (auto cls : {OutlierType::typical, OutlierType::magnitude, OutlierType::shape, OutlierType::joint}) {
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", x, y - 9,
                           spec.colors[static_cast<std::size_t>(cls)]);
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x + 14, y, outlier_type_name(cls));
        x += 100;
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\">outlined: flagged</text>\n", x + 14, y);
    svg += "</g>\n</svg>\n";
    return svg;
}

}  // namespace depthgram
