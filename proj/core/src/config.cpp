#include "sublin/config.hpp"

#include <cmath>
#include <fstream>

#include "sublin/errors.hpp"
#include "sublin/grid.hpp"
#include "sublin/increments.hpp"
#include "sublin/tilde.hpp"

namespace sublin {

namespace {

using nlohmann::ordered_json;

void expect_keys(const ordered_json& j, const std::string& section,
                 std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError("config: section '" + section + "' must be a JSON object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key '" + section + "." + item.key() + "'");
    }
  }
}

double as_number(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("config: '" + where + "' must be a number");
  return j.get<double>();
}

long as_integer(const ordered_json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError("config: '" + where + "' must be an integer");
  return j.get<long>();
}

std::string as_string(const ordered_json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError("config: '" + where + "' must be a string");
  return j.get<std::string>();
}

std::vector<double> as_number_list(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError("config: '" + where + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(as_number(v, where));
  return out;
}

std::vector<std::string> as_string_list(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError("config: '" + where + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(as_string(v, where));
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const ordered_json& j) {
  RunConfig cfg;
  expect_keys(j, "<root>", {"band", "tilde", "pde", "lattice", "mc", "verify", "output"});

  if (j.contains("band")) {
    const auto& b = j.at("band");
    expect_keys(b, "band", {"sigma_lower_sq", "sigma_upper_sq"});
    if (b.contains("sigma_lower_sq")) {
      cfg.band.sigma_lower_sq = as_number(b.at("sigma_lower_sq"), "band.sigma_lower_sq");
    }
    if (b.contains("sigma_upper_sq")) {
      cfg.band.sigma_upper_sq = as_number(b.at("sigma_upper_sq"), "band.sigma_upper_sq");
    }
  }

  if (j.contains("tilde")) {
    const auto& t = j.at("tilde");
    expect_keys(t, "tilde", {"breakpoints", "slopes"});
    if (!t.contains("breakpoints") || !t.contains("slopes")) {
      throw ConfigError("config: 'tilde' needs both 'breakpoints' and 'slopes'");
    }
    // Structure (ascending breakpoints, slope count) is validated by the
    // constructor; domination is validated later so validate() can name it.
    cfg.tilde = DominatedGenerator(as_number_list(t.at("breakpoints"), "tilde.breakpoints"),
                                   as_number_list(t.at("slopes"), "tilde.slopes"), cfg.band);
  }

  if (j.contains("pde")) {
    const auto& p = j.at("pde");
    expect_keys(p, "pde", {"dx", "dt", "domain", "clamp"});
    if (p.contains("dx")) cfg.pde.dx = as_number(p.at("dx"), "pde.dx");
    if (p.contains("dt")) cfg.pde.dt = as_number(p.at("dt"), "pde.dt");
    if (p.contains("clamp")) cfg.pde.clamp = as_number(p.at("clamp"), "pde.clamp");
    if (p.contains("domain")) {
      const auto d = as_number_list(p.at("domain"), "pde.domain");
      if (d.size() != 2) throw ConfigError("config: 'pde.domain' must be [min, max]");
      if (std::abs(d[0] + d[1]) > 1e-12) {
        throw ConfigError(
            "config: 'pde.domain' must be symmetric about 0 (the solvers are "
            "origin-centered), got [" +
            std::to_string(d[0]) + ", " + std::to_string(d[1]) + "]");
      }
      cfg.pde.halfwidth = d[1];
    }
  }

  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    expect_keys(l, "lattice", {"steps", "sigma_levels", "scheme", "subdiv"});
    if (l.contains("steps")) {
      cfg.lattice.steps = static_cast<int>(as_integer(l.at("steps"), "lattice.steps"));
    }
    if (l.contains("sigma_levels")) {
      cfg.lattice.sigma_levels =
          static_cast<int>(as_integer(l.at("sigma_levels"), "lattice.sigma_levels"));
    }
    if (l.contains("scheme")) cfg.lattice.scheme = as_string(l.at("scheme"), "lattice.scheme");
    if (l.contains("subdiv")) {
      cfg.lattice.subdiv = static_cast<int>(as_integer(l.at("subdiv"), "lattice.subdiv"));
    }
  }

  if (j.contains("mc")) {
    const auto& m = j.at("mc");
    expect_keys(m, "mc", {"paths", "seed"});
    if (m.contains("paths")) cfg.mc.paths = as_integer(m.at("paths"), "mc.paths");
    if (m.contains("seed")) {
      if (!m.at("seed").is_number_integer()) {
        throw ConfigError("config: 'mc.seed' must be an integer");
      }
      cfg.mc.seed = m.at("seed").get<uint64_t>();
    }
  }

  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    expect_keys(v, "verify", {"checks", "tolerances"});
    if (v.contains("checks")) cfg.verify.checks = as_string_list(v.at("checks"), "verify.checks");
    if (v.contains("tolerances")) {
      if (!v.at("tolerances").is_object()) {
        throw ConfigError("config: 'verify.tolerances' must be an object");
      }
      cfg.verify.tolerances = v.at("tolerances");
    }
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    expect_keys(o, "output", {"dir", "formats"});
    if (o.contains("dir")) cfg.output.dir = as_string(o.at("dir"), "output.dir");
    if (o.contains("formats")) {
      cfg.output.formats = as_string_list(o.at("formats"), "output.formats");
    }
  }

  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["band"] = {{"sigma_lower_sq", band.sigma_lower_sq},
               {"sigma_upper_sq", band.sigma_upper_sq}};
  if (tilde) {
    j["tilde"] = {
        {"breakpoints", std::vector<double>(tilde->breakpoints().begin(),
                                            tilde->breakpoints().end())},
        {"slopes", std::vector<double>(tilde->slopes().begin(), tilde->slopes().end())}};
  }
  j["pde"] = {{"dx", pde.dx},
              {"dt", pde.dt},
              {"domain", {-pde.halfwidth, pde.halfwidth}},
              {"clamp", pde.clamp}};
  j["lattice"] = {{"steps", lattice.steps},
                  {"sigma_levels", lattice.sigma_levels},
                  {"scheme", lattice.scheme},
                  {"subdiv", lattice.subdiv}};
  j["mc"] = {{"paths", mc.paths}, {"seed", mc.seed}};
  j["verify"] = {{"checks", verify.checks}, {"tolerances", verify.tolerances}};
  j["output"] = {{"dir", output.dir}, {"formats", output.formats}};
  return j;
}

void RunConfig::validate() const {
  // Band ordering and positivity (message comes from the factory).
  (void)VolatilityBand::make(band.sigma_lower_sq, band.sigma_upper_sq);

  if (!(pde.dx > 0.0)) throw ConfigError("config: 'pde.dx' must be > 0");
  if (pde.dt < 0.0) throw ConfigError("config: 'pde.dt' must be >= 0 (0 = largest stable)");
  if (pde.clamp < 0.0) throw ConfigError("config: 'pde.clamp' must be >= 0 (0 = default)");
  // Grid constructibility (node count integral, enough nodes).
  (void)SpatialGrid::make(-pde.halfwidth, pde.halfwidth, pde.dx);
  // Stability of the explicit march for the configured step.
  const double max_var =
      tilde ? std::max(tilde->max_variance(), band.sigma_upper_sq) : band.sigma_upper_sq;
  if (pde.dt > 0.0 && pde.dt * max_var / (pde.dx * pde.dx) > 1.0 + 1e-12) {
    throw ConfigError("config: 'pde.dt' violates the stability condition: need dt <= dx^2 / "
                      "max variance = " +
                      std::to_string(pde.dx * pde.dx / max_var));
  }

  if (lattice.steps < 1) throw ConfigError("config: 'lattice.steps' must be >= 1");
  if (lattice.sigma_levels < 2) throw ConfigError("config: 'lattice.sigma_levels' must be >= 2");
  if (lattice.subdiv < 1) throw ConfigError("config: 'lattice.subdiv' must be >= 1");
  (void)IncrementScheme::parse(lattice.scheme);

  if (mc.paths < 2) throw ConfigError("config: 'mc.paths' must be >= 2");

  if (verify.checks.empty()) throw ConfigError("config: 'verify.checks' must not be empty");
  static const char* known_checks[] = {"all",     "levy", "reflection", "krylov",
                                       "density", "sgn",  "perturbation"};
  for (const auto& c : verify.checks) {
    bool ok = false;
    for (const char* k : known_checks) ok = ok || c == k;
    if (!ok) {
      throw ConfigError("config: unknown check '" + c +
                        "' (valid: all, levy, reflection, krylov, density, sgn, perturbation)");
    }
  }

  for (const auto& f : output.formats) {
    if (f != "json" && f != "csv") {
      throw ConfigError("config: unknown output format '" + f + "' (valid: json, csv)");
    }
  }
  if (output.dir.empty()) throw ConfigError("config: 'output.dir' must not be empty");

  if (tilde) {
    const auto result = check_domination(*tilde, default_domination_probes(*tilde));
    if (!result.ok) {
      throw ConfigError("config: tilde generator fails domination: " + result.first_violation);
    }
  }
}

DominatedGenerator RunConfig::tilde_or_default() const {
  if (tilde) return *tilde;
  // Three segments whose slopes sit at relative positions 0.2 / 0.6 / 1.0 of
  // the admissible slope interval [lower/2, upper/2]; for the default band
  // this is the documented (0.2, 0.35, 0.5) instance.
  const double lo = 0.5 * band.sigma_lower_sq;
  const double hi = 0.5 * band.sigma_upper_sq;
  const double w = hi - lo;
  return DominatedGenerator({-1.0, 1.0}, {lo + 0.2 * w, lo + 0.6 * w, hi}, band);
}

VerifyOptions RunConfig::verify_options() const {
  VerifyOptions o;
  o.band = band;
  o.seed = mc.seed;
  o.sigma_levels = lattice.sigma_levels;
  o.mc_paths = mc.paths;
  o.mc_steps = lattice.steps;
  o.pde_dx = pde.dx;
  o.pde_halfwidth = pde.halfwidth;
  return o;
}

}  // namespace sublin
