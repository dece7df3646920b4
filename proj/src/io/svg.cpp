#include "chaoslab/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "chaoslab/io/csv.hpp"

namespace chaoslab::io {

namespace {

constexpr double kMarginLeft = 74.0;
constexpr double kMarginRight = 18.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape_text(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c; break;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double place(double value, double pixel_lo, double pixel_hi) const {
        const double v = log ? std::log10(value) : value;
        const double frac = (v - lo) / (hi - lo);
        return pixel_lo + frac * (pixel_hi - pixel_lo);
    }
};

/// Round a span to a "nice" tick step (1, 2, or 5 times a power of ten).
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    double step = 10.0;
    if (norm <= 1.0) {
        step = 1.0;
    } else if (norm <= 2.0) {
        step = 2.0;
    } else if (norm <= 5.0) {
        step = 5.0;
    }
    return step * mag;
}

std::vector<double> make_ticks(const Axis& axis) {
    std::vector<double> ticks;
    if (axis.log) {
        // One tick per decade, thinned if there are many decades.
        const int first = static_cast<int>(std::ceil(axis.lo - 1e-9));
        const int last = static_cast<int>(std::floor(axis.hi + 1e-9));
        const int decades = last - first;
        const int stride = decades > 8 ? 2 : 1;
        for (int d = first; d <= last; d += stride) {
            ticks.push_back(std::pow(10.0, d));
        }
        return ticks;
    }
    const double step = nice_step(axis.hi - axis.lo, 5);
    const double start = std::ceil(axis.lo / step) * step;
    for (double v = start; v <= axis.hi + 0.5 * step; v += step) {
        // Snap values that are zero up to rounding so labels read "0".
        ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return ticks;
}

Axis fit_axis(const LinePlot& plot, bool vertical) {
    Axis axis;
    axis.log = vertical ? plot.log_y : plot.log_x;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Series& s : plot.series) {
        for (const auto& [x, y] : s.points) {
            const double v = vertical ? y : x;
            if (axis.log && !(v > 0.0)) {
                continue;
            }
            const double t = axis.log ? std::log10(v) : v;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    if (!(lo <= hi)) { // no usable points
        lo = axis.log ? 0.0 : 0.0;
        hi = axis.log ? 1.0 : 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = axis.log ? 0.0 : 0.05 * (hi - lo);
    axis.lo = lo - pad;
    axis.hi = hi + pad;
    return axis;
}

} // namespace

std::string render_svg(const LinePlot& plot) {
    const double w = plot.width;
    const double h = plot.height;
    const double x0 = kMarginLeft;
    const double x1 = w - kMarginRight;
    const double y0 = h - kMarginBottom; // pixel y grows downward
    const double y1 = kMarginTop;

    const Axis ax = fit_axis(plot, /*vertical=*/false);
    const Axis ay = fit_axis(plot, /*vertical=*/true);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
           "\" height=\"" + std::to_string(plot.height) + "\" viewBox=\"0 0 " +
           std::to_string(plot.width) + " " + std::to_string(plot.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt2(0.5 * w) + "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" + escape_text(plot.title) + "</text>\n";

    // Tick grid and labels.
    svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double tick : make_ticks(ax)) {
        const double px = ax.place(tick, x0, x1);
        if (px < x0 - 0.5 || px > x1 + 0.5) {
            continue;
        }
        svg += "<line x1=\"" + fmt2(px) + "\" y1=\"" + fmt2(y0) + "\" x2=\"" + fmt2(px) +
               "\" y2=\"" + fmt2(y1) + "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt2(px) + "\" y=\"" + fmt2(y0 + 16.0) +
               "\" text-anchor=\"middle\">" + escape_text(fmt_tick(tick)) + "</text>\n";
    }
    for (double tick : make_ticks(ay)) {
        const double py = ay.place(tick, y0, y1);
        if (py > y0 + 0.5 || py < y1 - 0.5) {
            continue;
        }
        svg += "<line x1=\"" + fmt2(x0) + "\" y1=\"" + fmt2(py) + "\" x2=\"" + fmt2(x1) +
               "\" y2=\"" + fmt2(py) + "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt2(x0 - 6.0) + "\" y=\"" + fmt2(py + 4.0) +
               "\" text-anchor=\"end\">" + escape_text(fmt_tick(tick)) + "</text>\n";
    }
    svg += "</g>\n";

    // Frame and axis titles.
    svg += "<rect x=\"" + fmt2(x0) + "\" y=\"" + fmt2(y1) + "\" width=\"" + fmt2(x1 - x0) +
           "\" height=\"" + fmt2(y0 - y1) + "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt2(0.5 * (x0 + x1)) + "\" y=\"" + fmt2(h - 14.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape_text(plot.x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt2(0.5 * (y0 + y1)) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
           fmt2(0.5 * (y0 + y1)) + ")\">" + escape_text(plot.y_label) + "</text>\n";

    // Data polylines.
    std::size_t color_index = 0;
    for (const Series& s : plot.series) {
        const std::string color = s.color.empty()
                                      ? kPalette[color_index % (sizeof(kPalette) / sizeof(*kPalette))]
                                      : s.color;
        ++color_index;
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if ((ax.log && !(x > 0.0)) || (ay.log && !(y > 0.0))) {
                continue;
            }
            pts += fmt2(ax.place(x, x0, x1)) + "," + fmt2(ay.place(y, y0, y1)) + " ";
        }
        if (pts.empty()) {
            continue;
        }
        svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.6\"";
        if (s.dashed) {
            svg += " stroke-dasharray=\"6 4\"";
        }
        svg += " points=\"" + pts + "\"/>\n";
    }

    // Legend, top-right inside the frame.
    if (!plot.series.empty()) {
        const double box_w = 168.0;
        const double row_h = 17.0;
        const double lx = x1 - box_w - 8.0;
        const double ly = y1 + 8.0;
        svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
        svg += "<rect x=\"" + fmt2(lx) + "\" y=\"" + fmt2(ly) + "\" width=\"" + fmt2(box_w) +
               "\" height=\"" + fmt2(row_h * plot.series.size() + 8.0) +
               "\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999\"/>\n";
        color_index = 0;
        for (std::size_t i = 0; i < plot.series.size(); ++i) {
            const Series& s = plot.series[i];
            const std::string color =
                s.color.empty() ? kPalette[color_index % (sizeof(kPalette) / sizeof(*kPalette))]
                                : s.color;
            ++color_index;
            const double ry = ly + 8.0 + row_h * i + 0.5 * row_h;
            svg += "<line x1=\"" + fmt2(lx + 8.0) + "\" y1=\"" + fmt2(ry) + "\" x2=\"" +
                   fmt2(lx + 34.0) + "\" y2=\"" + fmt2(ry) + "\" stroke=\"" + color +
                   "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
            svg += "<text x=\"" + fmt2(lx + 40.0) + "\" y=\"" + fmt2(ry + 4.0) + "\">" +
                   escape_text(s.label) + "</text>\n";
        }
        svg += "</g>\n";
    }

    svg += "</svg>\n";
    return svg;
}

void write_svg(const std::filesystem::path& path, const LinePlot& plot) {
    write_text_atomic(path, render_svg(plot));
}

} // namespace chaoslab::io
