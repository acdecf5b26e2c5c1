#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sublin/band.hpp"
#include "sublin/verify.hpp"

namespace sublin {

// Run configuration, parsed from a JSON file. Every section and key is
// optional; omitted keys take the defaults below (which reproduce the
// acceptance settings). Unknown keys raise ConfigError so typos cannot
// silently skew a run. validate() is called before any computation and names
// the violated precondition (band ordering, CFL, domination, scheme shape).
//
// Schema:
//   {
//     "band":    {"sigma_lower_sq": 0.25, "sigma_upper_sq": 1.0},
//     "tilde":   {"breakpoints": [-1, 1], "slopes": [0.2, 0.35, 0.5]},
//     "pde":     {"dx": 0.01, "dt": 0.0, "domain": [-8.0, 8.0], "clamp": 0.0},
//     "lattice": {"steps": 256, "sigma_levels": 5,
//                 "scheme": "rademacher", "subdiv": 8},
//     "mc":      {"paths": 100000, "seed": 424242},
//     "verify":  {"checks": ["all"], "tolerances": {}},
//     "output":  {"dir": "out", "formats": ["json", "csv"]}
//   }
//
// dt = 0 means "largest stable step" (tight CFL); clamp = 0 keeps each test
// function's default clamp.
struct RunConfig {
  VolatilityBand band{};
  std::optional<DominatedGenerator> tilde;

  struct Pde {
    double dx = 0.01;
    double dt = 0.0;
    // "domain" in JSON: [-halfwidth, halfwidth]. The engines are centered at
    // the origin, so the domain must be symmetric.
    double halfwidth = 8.0;
    double clamp = 0.0;
  } pde;

  struct Lattice {
    int steps = 256;
    int sigma_levels = 5;
    std::string scheme = "rademacher";
    int subdiv = 8;
  } lattice;

  struct Mc {
    long paths = 100000;
    uint64_t seed = 424242;
  } mc;

  struct Verify {
    std::vector<std::string> checks = {"all"};
    nlohmann::ordered_json tolerances = nlohmann::ordered_json::object();
  } verify;

  struct Output {
    std::string dir = "out";
    std::vector<std::string> formats = {"json", "csv"};
  } output;

  static RunConfig from_json(const nlohmann::ordered_json& j);
  static RunConfig load(const std::string& path);

  // The fully resolved configuration (defaults filled in), embedded in every
  // artifact so runs are reproducible from the artifact alone.
  nlohmann::ordered_json to_json() const;

  // Cross-field preconditions: band ordering, CFL for the explicit scheme,
  // domination of the tilde generator, scheme parse, positive counts.
  void validate() const;

  // The tilde generator in force: the configured one or the default
  // three-segment instance scaled to the band.
  DominatedGenerator tilde_or_default() const;

  // Harness knobs derived from this configuration.
  VerifyOptions verify_options() const;
};

}  // namespace sublin
