#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sublin {

// Closed variance band [sigma_lower_sq, sigma_upper_sq] describing volatility
// uncertainty. alpha() is the exponent of the small-ball occupation bound,
// always in [0, 1/2).
struct VolatilityBand {
  double sigma_lower_sq = 0.25;
  double sigma_upper_sq = 1.0;

  // Validates 0 <= lower <= upper, upper > 0; throws ConfigError otherwise.
  static VolatilityBand make(double lower_sq, double upper_sq);

  double alpha() const { return sigma_lower_sq / (2.0 * sigma_upper_sq); }
  double sigma_lower() const { return std::sqrt(sigma_lower_sq); }
  double sigma_upper() const { return std::sqrt(sigma_upper_sq); }
  bool degenerate() const { return sigma_lower_sq == sigma_upper_sq; }
};

// The envelope nonlinearity G(a) = (sigma_upper_sq*a^+ - sigma_lower_sq*a^-)/2
// that drives every expectation in the library: it assigns the worst-case
// one-step variance to a given curvature a (upper variance for convex, lower
// for concave). eval is positively homogeneous, monotone, and sub-additive.
class SublinearGenerator {
 public:
  explicit SublinearGenerator(VolatilityBand band) : band_(band) {}

  double eval(double a) const {
    return 0.5 * (a >= 0.0 ? band_.sigma_upper_sq * a : band_.sigma_lower_sq * a);
  }

  // eval(a) + eps^2*a/2: widens the effective band to
  // [lower + eps^2, upper + eps^2], hence nondegenerate for eps > 0.
  // Throws std::invalid_argument for negative eps.
  double eval_epsilon(double a, double eps) const;

  const VolatilityBand& band() const { return band_; }

 private:
  VolatilityBand band_;
};

// Continuous piecewise-linear nonlinearity anchored at the origin (value at 0
// is exactly 0), given by ascending breakpoints and one slope per segment
// (segments: (-inf, b_0], [b_0, b_1], ..., [b_last, +inf), so
// slopes.size() == breakpoints.size() + 1). Extrapolation beyond the outermost
// breakpoints keeps the outermost slopes, which preserves the slope-interval
// property globally. For this class, "monotone and dominated by G" is exactly
// equivalent to every slope lying in [sigma_lower_sq/2, sigma_upper_sq/2];
// construction validates structure only, domination is checked separately so
// that deliberately broken instances can be built and flagged.
class DominatedGenerator {
 public:
  DominatedGenerator(std::vector<double> breakpoints, std::vector<double> slopes,
                     VolatilityBand band);

  double eval(double a) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> slopes() const { return slopes_; }
  const VolatilityBand& band() const { return band_; }

  // Largest local variance 2*max(slope); the stability bound of explicit
  // marching schemes uses this.
  double max_variance() const;

  // G itself encoded as two segments split at 0 (self-domination witness).
  static DominatedGenerator from_sublinear(const VolatilityBand& band);

 private:
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> anchor_values_;  // value at each breakpoint, anchored so eval(0) == 0
  VolatilityBand band_;
};

struct DominationCheckResult {
  bool ok = true;
  // Human-readable description of the first violation (empty when ok).
  std::string first_violation;
};

// True iff eval(0) == 0, every slope lies in [lower/2, upper/2] (checked
// exactly), and every probe pair (a, b) satisfies
// tilde(a) - tilde(b) <= G(a - b) + 1e-12 (round-off allowance on the
// interpolated values). Probes must be nonempty.
DominationCheckResult check_domination(const DominatedGenerator& gen,
                                       std::span<const std::pair<double, double>> probes);

}  // namespace sublin
