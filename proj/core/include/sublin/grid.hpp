#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sublin/errors.hpp"

namespace sublin {

// Uniform truncation of the real line: nodes x_min + j*dx, j = 0..n_nodes-1.
struct SpatialGrid {
  double x_min = -8.0;
  double x_max = 8.0;
  double dx = 0.01;
  int n_nodes = 1601;

  // Validates x_max > x_min, dx > 0, (x_max - x_min)/dx integral within 1e-9,
  // and at least 5 nodes; throws ConfigError otherwise.
  static SpatialGrid make(double x_min, double x_max, double dx) {
    if (!(dx > 0.0)) throw ConfigError("grid: dx must be > 0");
    if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
    const double ratio = (x_max - x_min) / dx;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9) {
      throw ConfigError("grid: (x_max - x_min)/dx must be an integer within 1e-9, got " +
                        std::to_string(ratio));
    }
    SpatialGrid g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.dx = dx;
    g.n_nodes = static_cast<int>(rounded) + 1;
    if (g.n_nodes < 5) throw ConfigError("grid: need at least 5 nodes");
    return g;
  }

  double x(int j) const { return x_min + j * dx; }
};

// A spatial grid paired with one value per node (a tabulated function of x at
// a fixed time).
struct GridFunction {
  SpatialGrid grid;
  std::vector<double> values;
  double time_stamp = 0.0;

  // Linear interpolation between nodes; arguments beyond the grid clamp to
  // the edge values (consistent with the flat-boundary marching rule).
  double interpolate(double x) const {
    if (x <= grid.x_min) return values.front();
    if (x >= grid.x_max) return values.back();
    const double pos = (x - grid.x_min) / grid.dx;
    const int j = static_cast<int>(pos);
    const double frac = pos - j;
    return values[j] + frac * (values[j + 1] - values[j]);
  }

  // Largest |values| deviation against another tabulation on the same grid.
  double sup_distance(const GridFunction& other) const {
    double sup = 0.0;
    for (size_t j = 0; j < values.size(); ++j) {
      sup = std::max(sup, std::abs(values[j] - other.values[j]));
    }
    return sup;
  }
};

}  // namespace sublin
