#pragma once

// Shared fixtures for the test suites: the default volatility band and a
// classical-normal integration oracle that is independent of the solvers
// under test (it integrates the explicit Gaussian density with panel
// quadrature, using no PDE or lattice code).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/increments.hpp"

namespace testutil {

inline sublin::VolatilityBand default_band() {
  return sublin::VolatilityBand::make(0.25, 1.0);
}

// E[f(sqrt(variance) * Z)] for standard normal Z, by piecewise Gauss-Legendre
// panels against the explicit density over [-8 sigma, 8 sigma]. Panel edges
// sit on multiples of sigma/16, so every kink used by the payoff batteries
// (which live on multiples of 1/16 in units of sigma) falls on a panel
// boundary; each panel integrand is then analytic and 12-node panels reach
// machine accuracy. The discarded tail mass is below 1e-14.
inline double normal_expectation(double variance, const std::function<double(double)>& f) {
  const double sigma = std::sqrt(variance);
  const double half_width = 8.0 * sigma;
  const int panels = 256;
  const double panel = 2.0 * half_width / panels;  // sigma / 16
  const double inv_norm = 1.0 / std::sqrt(2.0 * M_PI * variance);
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = -half_width + p * panel;
    const auto rule = sublin::LegendreRule::on_interval(a, a + panel, 12);
    for (size_t k = 0; k < rule.nodes.size(); ++k) {
      const double x = rule.nodes[k];
      total += rule.weights[k] * f(x) * inv_norm * std::exp(-x * x / (2.0 * variance));
    }
  }
  return total;
}

// Deterministic pseudo-random values in [lo, hi] for property tests.
inline std::vector<double> random_values(int n, uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = u(engine);
  return v;
}

}  // namespace testutil
