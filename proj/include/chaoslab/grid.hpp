#pragma once

#include <string>
#include <vector>

namespace chaoslab {

enum class GridSpacing { linear, geometric, composite };

GridSpacing parse_grid_spacing(const std::string& name);
std::string grid_spacing_name(GridSpacing spacing);

/// Coupling grid on [min, max] with `count` points. Linear and geometric
/// are the usual progressions; composite covers [min, max/10] with a
/// geometric half and (max/10, max] with a linear half, resolving both the
/// small-coupling structure and the broad large-coupling features with one
/// grid. The final point is always exactly `max`, and every point is
/// strictly positive.
std::vector<double> make_lambda_grid(double min, double max, int count, GridSpacing spacing);

} // namespace chaoslab
