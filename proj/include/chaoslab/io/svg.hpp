#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace chaoslab::io {

struct Series {
    std::string label;
    std::string color; // CSS color; empty picks from the default palette
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
    int width = 760;
    int height = 480;
};

/// Render a self-contained SVG line plot: axes, tick grid, polylines, and
/// a legend. Output is deterministic for identical inputs. Log axes drop
/// non-positive points (the plotted quantities are positive by contract).
std::string render_svg(const LinePlot& plot);

void write_svg(const std::filesystem::path& path, const LinePlot& plot);

} // namespace chaoslab::io
