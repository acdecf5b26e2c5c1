#pragma once

#include <memory>
#include <string>

#include "sublin/band.hpp"
#include "sublin/lattice.hpp"
#include "sublin/pathspace.hpp"

namespace sublin {

// A volatility control: constant level, bang-bang threshold rule, or a table
// read off a DP argmax. Emitted levels are validated against the band at
// construction (tables index the sigma levels directly, so they cannot
// escape it).
class ControlPolicy {
 public:
  enum class Kind { constant, bangbang, table };

  static ControlPolicy constant(double sigma, const VolatilityBand& band);
  // sigma_upper when b <= threshold, else sigma_lower.
  static ControlPolicy bangbang(double threshold, const VolatilityBand& band);
  // Table over the DP's base axis; dp must retain argmax layers and have the
  // base coordinate as axis 0. Throws std::invalid_argument otherwise.
  static ControlPolicy from_table(std::shared_ptr<const DpResult> dp,
                                  const VolatilityBand& band);
  // "const:1.0" | "bangbang:0.25" | "table:<json file>".
  static ControlPolicy parse(const std::string& text, const VolatilityBand& band);

  double sigma_at(int step, double b) const;
  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double band_lo() const { return sigma_lo_; }
  double band_hi() const { return sigma_hi_; }
  // Adapter for the simulation entry points.
  StepPolicy as_step_policy() const;

 private:
  ControlPolicy() = default;

  Kind kind_ = Kind::constant;
  std::string name_;
  double sigma_ = 1.0;
  double threshold_ = 0.0;
  double sigma_lo_ = 0.0, sigma_hi_ = 1.0;
  std::shared_ptr<const DpResult> table_;
};

// Minimal persistence for table policies: layers of argmax indices plus the
// axis geometry, as JSON.
void save_policy_table(const std::string& path, const DpResult& dp);
std::shared_ptr<const DpResult> load_policy_table(const std::string& path);

}  // namespace sublin
