#pragma once

#include <vector>

#include "sublin/band.hpp"

namespace sublin {

// Time grid 0 = t_0 < t_1 < ... < t_n = T.
struct TimePartition {
  std::vector<double> times;

  static TimePartition uniform(double horizon, int steps);

  int steps() const { return static_cast<int>(times.size()) - 1; }
  double horizon() const { return times.back(); }
  double dt(int i) const { return times[i + 1] - times[i]; }
  // Largest step (the refinement parameter of every convergence statement).
  double mesh() const;

  // Strictly increasing from 0; throws ConfigError otherwise.
  void validate() const;
};

// Finite ascending set of volatility levels within the band; the one-step
// operator takes its maximum over these. Both endpoints are always present,
// so the band's extremes are attainable.
struct SigmaSet {
  std::vector<double> levels;

  static SigmaSet endpoints(const VolatilityBand& band);
  // k levels evenly spaced in sigma between the endpoints (k >= 2).
  static SigmaSet refined(const VolatilityBand& band, int k);

  int size() const { return static_cast<int>(levels.size()); }

  // Ascending, inside the band, containing both endpoints; throws ConfigError.
  void validate(const VolatilityBand& band) const;
};

}  // namespace sublin
