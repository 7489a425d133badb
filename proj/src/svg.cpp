#include "dblab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dblab/errors.hpp"

namespace dblab {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_svg(const std::string& path, const std::vector<SvgSeries>& series,
               const SvgOptions& opts) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    const double xpad = 0.04 * (xmax - xmin);
    const double ypad = 0.06 * (ymax - ymin);
    xmin -= xpad; xmax += xpad;
    ymin -= ypad; ymax += ypad;

    const double ml = 62, mr = 16, mt = 34, mb = 44;
    const double pw = opts.width - ml - mr;
    const double ph = opts.height - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("write_svg: cannot open " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
      << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

    // Axis ticks: five per axis.
    for (int t = 0; t <= 4; ++t) {
        const double fxv = xmin + (xmax - xmin) * t / 4.0;
        const double fyv = ymin + (ymax - ymin) * t / 4.0;
        f << "<text x=\"" << px(fxv) << "\" y=\"" << opts.height - mb + 18
          << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">" << fmt(fxv) << "</text>\n";
        f << "<text x=\"" << ml - 6 << "\" y=\"" << py(fyv) + 4
          << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\">" << fmt(fyv) << "</text>\n";
    }
    if (!opts.title.empty())
        f << "<text x=\"" << opts.width / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">"
          << opts.title << "</text>\n";
    if (!opts.x_label.empty())
        f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opts.height - 8
          << "\" font-size=\"12\" text-anchor=\"middle\">" << opts.x_label << "</text>\n";
    if (!opts.y_label.empty())
        f << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
          << "transform=\"rotate(-90 14 " << mt + ph / 2 << ")\">" << opts.y_label << "</text>\n";

    int legend_y = static_cast<int>(mt) + 14;
    for (const auto& s : series) {
        if (s.dots) {
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                f << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
                  << "\" r=\"2.2\" fill=\"" << s.color << "\"/>\n";
            }
        } else {
            f << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
            if (s.dashed) f << " stroke-dasharray=\"6 4\"";
            f << " points=\"";
            bool first = true;
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (!first) f << ' ';
                f << fmt(px(x)) << ',' << fmt(py(y));
                first = false;
            }
            f << "\"/>\n";
        }
        if (!s.label.empty()) {
            f << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << legend_y - 9
              << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
            f << "<text x=\"" << ml + pw - 136 << "\" y=\"" << legend_y
              << "\" font-size=\"11\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    f << "</svg>\n";
    if (!f) throw ConfigError("write_svg: write failed for " + path);
}

}  // namespace dblab
