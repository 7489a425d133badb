#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dblab {

// Minimal native SVG polyline/scatter writer. CSV stays the canonical output;
// the chart is a convenience view with fixed styling.
struct SvgSeries {
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    std::string label;
    bool dots = false;      // scatter instead of polyline
    bool dashed = false;
};

struct SvgOptions {
    int width = 760;
    int height = 520;
    std::string title;
    std::string x_label;
    std::string y_label;
};

void write_svg(const std::string& path, const std::vector<SvgSeries>& series,
               const SvgOptions& opts);

}  // namespace dblab
