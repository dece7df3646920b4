#include "chaoslab/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace chaoslab {

GridSpacing parse_grid_spacing(const std::string& name) {
    if (name == "linear") {
        return GridSpacing::linear;
    }
    if (name == "geometric") {
        return GridSpacing::geometric;
    }
    if (name == "composite") {
        return GridSpacing::composite;
    }
    throw std::invalid_argument("unknown grid spacing '" + name +
                                "' (expected linear, geometric, or composite)");
}

std::string grid_spacing_name(GridSpacing spacing) {
    switch (spacing) {
    case GridSpacing::linear:
        return "linear";
    case GridSpacing::geometric:
        return "geometric";
    case GridSpacing::composite:
        return "composite";
    }
    throw std::logic_error("grid_spacing_name: unhandled enumerator");
}

namespace {

std::vector<double> linear_grid(double min, double max, int count) {
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = (max - min) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = min + step * static_cast<double>(i);
    }
    grid.back() = max;
    return grid;
}

std::vector<double> geometric_grid(double min, double max, int count) {
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double ratio = std::log(max / min) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = min * std::exp(ratio * static_cast<double>(i));
    }
    grid.back() = max;
    return grid;
}

} // namespace

std::vector<double> make_lambda_grid(double min, double max, int count, GridSpacing spacing) {
    if (!(min > 0.0)) {
        throw std::invalid_argument("coupling grid: minimum must be positive, got " +
                                    std::to_string(min));
    }
    if (!(max > min)) {
        throw std::invalid_argument("coupling grid: maximum must exceed the minimum");
    }
    if (count < 2) {
        throw std::invalid_argument("coupling grid: need at least 2 points, got " +
                                    std::to_string(count));
    }

    switch (spacing) {
    case GridSpacing::linear:
        return linear_grid(min, max, count);
    case GridSpacing::geometric:
        return geometric_grid(min, max, count);
    case GridSpacing::composite:
        break;
    }

    const double split = max / 10.0;
    const int head = count / 2;         // geometric part, ends exactly at split
    if (split <= min || head < 2) {
        // The geometric half has no room; fall back to one linear run.
        return linear_grid(min, max, count);
    }
    const int tail = count - head;      // linear part on (split, max]
    std::vector<double> grid = geometric_grid(min, split, head);
    const double step = (max - split) / static_cast<double>(tail);
    for (int j = 1; j <= tail; ++j) {
        grid.push_back(split + step * static_cast<double>(j));
    }
    grid.back() = max;
    return grid;
}

} // namespace chaoslab
