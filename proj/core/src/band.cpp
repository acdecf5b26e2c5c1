#include "sublin/band.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "sublin/errors.hpp"

namespace sublin {

VolatilityBand VolatilityBand::make(double lower_sq, double upper_sq) {
  if (!(lower_sq >= 0.0)) {
    throw ConfigError("band: sigma_lower_sq must be >= 0, got " + std::to_string(lower_sq));
  }
  if (!(upper_sq > 0.0)) {
    throw ConfigError("band: sigma_upper_sq must be > 0, got " + std::to_string(upper_sq));
  }
  if (lower_sq > upper_sq) {
    throw ConfigError("band: sigma_lower_sq <= sigma_upper_sq required, got [" +
                      std::to_string(lower_sq) + ", " + std::to_string(upper_sq) + "]");
  }
  return VolatilityBand{lower_sq, upper_sq};
}

double SublinearGenerator::eval_epsilon(double a, double eps) const {
  if (eps < 0.0) {
    throw std::invalid_argument("eval_epsilon: eps must be >= 0, got " + std::to_string(eps));
  }
  return eval(a) + 0.5 * eps * eps * a;
}

DominatedGenerator::DominatedGenerator(std::vector<double> breakpoints,
                                       std::vector<double> slopes, VolatilityBand band)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), band_(band) {
  if (slopes_.size() != breakpoints_.size() + 1) {
    throw ConfigError("dominated generator: need one slope per segment (slopes = breakpoints + 1), got " +
                      std::to_string(slopes_.size()) + " slopes for " +
                      std::to_string(breakpoints_.size()) + " breakpoints");
  }
  if (std::adjacent_find(breakpoints_.begin(), breakpoints_.end(), std::greater_equal<>()) !=
      breakpoints_.end()) {
    throw ConfigError("dominated generator: breakpoints must be strictly ascending");
  }
  for (double s : slopes_) {
    if (!std::isfinite(s)) throw ConfigError("dominated generator: slopes must be finite");
  }

  // Anchor the piecewise-linear function so that eval(0) == 0 exactly: walk
  // from the origin's segment outwards accumulating slope * width.
  anchor_values_.assign(breakpoints_.size(), 0.0);
  if (!breakpoints_.empty()) {
    // Index of the segment containing 0: first breakpoint >= 0 bounds it above.
    size_t seg0 = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), 0.0) -
                  breakpoints_.begin();
    // Value at breakpoint k for k >= seg0 (walking right from 0).
    double v = 0.0;
    double x = 0.0;
    for (size_t k = seg0; k < breakpoints_.size(); ++k) {
      v += slopes_[k] * (breakpoints_[k] - x);
      x = breakpoints_[k];
      anchor_values_[k] = v;
    }
    // Walking left from 0: value at breakpoint k for k < seg0.
    v = 0.0;
    x = 0.0;
    for (size_t k = seg0; k-- > 0;) {
      v -= slopes_[k + 1] * (x - breakpoints_[k]);
      x = breakpoints_[k];
      anchor_values_[k] = v;
    }
  }
}

double DominatedGenerator::eval(double a) const {
  if (breakpoints_.empty()) return slopes_[0] * a;
  size_t seg = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), a) -
               breakpoints_.begin();
  // Interpolate from the nearest anchored breakpoint of the segment.
  if (seg == 0) return anchor_values_[0] + slopes_[0] * (a - breakpoints_[0]);
  return anchor_values_[seg - 1] + slopes_[seg] * (a - breakpoints_[seg - 1]);
}

double DominatedGenerator::max_variance() const {
  return 2.0 * *std::max_element(slopes_.begin(), slopes_.end());
}

DominatedGenerator DominatedGenerator::from_sublinear(const VolatilityBand& band) {
  return DominatedGenerator({0.0}, {band.sigma_lower_sq / 2.0, band.sigma_upper_sq / 2.0},
                            band);
}

DominationCheckResult check_domination(const DominatedGenerator& gen,
                                       std::span<const std::pair<double, double>> probes) {
  if (probes.empty()) {
    throw std::invalid_argument("check_domination: probe set must be nonempty");
  }
  DominationCheckResult result;

  if (gen.eval(0.0) != 0.0) {
    result.ok = false;
    result.first_violation = "value at 0 is " + std::to_string(gen.eval(0.0)) + ", expected exactly 0";
    return result;
  }

  // Structural characterization, checked exactly: monotonicity plus two-sided
  // domination by G hold iff every slope lies in [lower/2, upper/2].
  const double lo = gen.band().sigma_lower_sq / 2.0;
  const double hi = gen.band().sigma_upper_sq / 2.0;
  auto slopes = gen.slopes();
  for (size_t k = 0; k < slopes.size(); ++k) {
    if (slopes[k] < lo || slopes[k] > hi) {
      result.ok = false;
      std::ostringstream os;
      os << "segment " << k << " has slope " << slopes[k] << " outside [" << lo << ", " << hi
         << "]";
      result.first_violation = os.str();
      return result;
    }
  }

  // Sampled two-sided check on the probe pairs, with a round-off allowance on
  // the interpolated values.
  const SublinearGenerator g(gen.band());
  constexpr double kTol = 1e-12;
  for (const auto& [a, b] : probes) {
    const double lhs = gen.eval(a) - gen.eval(b);
    const double rhs = g.eval(a - b);
    if (lhs > rhs + kTol) {
      result.ok = false;
      std::ostringstream os;
      os << "probe (" << a << ", " << b << "): tilde(a)-tilde(b) = " << lhs << " > G(a-b) = "
         << rhs;
      result.first_violation = os.str();
      return result;
    }
  }
  return result;
}

}  // namespace sublin
