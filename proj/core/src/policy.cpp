#include "sublin/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sublin/errors.hpp"

namespace sublin {

ControlPolicy ControlPolicy::constant(double sigma, const VolatilityBand& band) {
  if (!(sigma >= band.sigma_lower() - 1e-12 && sigma <= band.sigma_upper() + 1e-12)) {
    throw std::invalid_argument("policy: constant sigma outside the band");
  }
  ControlPolicy p;
  p.kind_ = Kind::constant;
  p.sigma_ = sigma;
  p.sigma_lo_ = band.sigma_lower();
  p.sigma_hi_ = band.sigma_upper();
  p.name_ = "const:" + std::to_string(sigma);
  return p;
}

ControlPolicy ControlPolicy::bangbang(double threshold, const VolatilityBand& band) {
  ControlPolicy p;
  p.kind_ = Kind::bangbang;
  p.threshold_ = threshold;
  p.sigma_lo_ = band.sigma_lower();
  p.sigma_hi_ = band.sigma_upper();
  p.name_ = "bangbang:" + std::to_string(threshold);
  return p;
}

ControlPolicy ControlPolicy::from_table(std::shared_ptr<const DpResult> dp,
                                        const VolatilityBand& band) {
  if (!dp || dp->argmax.empty()) {
    throw std::invalid_argument("policy: table requires a DP run with retained argmax layers");
  }
  if (dp->axes.size() != 1 || dp->axes[0].name != "base") {
    throw std::invalid_argument("policy: table requires a one-dimensional base-state DP");
  }
  for (double s : dp->sigma_levels) {
    if (s < band.sigma_lower() - 1e-12 || s > band.sigma_upper() + 1e-12) {
      throw std::invalid_argument("policy: table sigma level outside the band");
    }
  }
  ControlPolicy p;
  p.kind_ = Kind::table;
  p.table_ = std::move(dp);
  p.sigma_lo_ = band.sigma_lower();
  p.sigma_hi_ = band.sigma_upper();
  p.name_ = "table";
  return p;
}

ControlPolicy ControlPolicy::parse(const std::string& text, const VolatilityBand& band) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "const" || head == "constant") return constant(std::stod(arg), band);
    if (head == "bangbang") return bangbang(std::stod(arg), band);
  } catch (const std::logic_error&) {
    throw ConfigError("policy: cannot parse numeric argument in '" + text + "'");
  }
  if (head == "table") {
    if (arg.empty()) throw ConfigError("policy: table needs a file argument");
    return from_table(load_policy_table(arg), band);
  }
  throw ConfigError("policy: unknown kind '" + head + "' (const:S | bangbang:T | table:FILE)");
}

double ControlPolicy::sigma_at(int step, double b) const {
  switch (kind_) {
    case Kind::constant:
      return sigma_;
    case Kind::bangbang:
      return b <= threshold_ ? sigma_hi_ : sigma_lo_;
    case Kind::table: {
      const auto& dp = *table_;
      const int layer = std::clamp(step, 0, static_cast<int>(dp.argmax.size()) - 1);
      const auto& ax = dp.axes[0];
      const int node = std::clamp(static_cast<int>(std::lround(b / dp.h)), ax.lo, ax.hi);
      return dp.sigma_levels[dp.argmax[layer][node - ax.lo]];
    }
  }
  return sigma_;
}

StepPolicy ControlPolicy::as_step_policy() const {
  return [this](int step, double b) { return sigma_at(step, b); };
}

void save_policy_table(const std::string& path, const DpResult& dp) {
  if (dp.argmax.empty()) {
    throw std::invalid_argument("save_policy_table: DP run did not retain argmax layers");
  }
  if (dp.axes.size() != 1) {
    throw std::invalid_argument("save_policy_table: only one-dimensional tables are stored");
  }
  nlohmann::ordered_json j;
  j["h"] = dp.h;
  j["axis"] = {{"name", dp.axes[0].name}, {"lo", dp.axes[0].lo}, {"hi", dp.axes[0].hi}};
  j["sigma_levels"] = dp.sigma_levels;
  auto& layers = j["argmax"] = nlohmann::ordered_json::array();
  for (const auto& layer : dp.argmax) {
    layers.push_back(std::vector<int>(layer.begin(), layer.end()));
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("save_policy_table: cannot open " + path);
  os << j.dump(2) << '\n';
}

std::shared_ptr<const DpResult> load_policy_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("load_policy_table: cannot open " + path);
  nlohmann::ordered_json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("load_policy_table: " + path + " is not valid JSON: " + e.what());
  }
  auto dp = std::make_shared<DpResult>();
  try {
    dp->h = j.at("h").get<double>();
    DpAxis ax;
    ax.name = j.at("axis").at("name").get<std::string>();
    ax.lo = j.at("axis").at("lo").get<int>();
    ax.hi = j.at("axis").at("hi").get<int>();
    dp->axes.push_back(ax);
    dp->sigma_levels = j.at("sigma_levels").get<std::vector<double>>();
    for (const auto& layer : j.at("argmax")) {
      auto ints = layer.get<std::vector<int>>();
      dp->argmax.emplace_back(ints.begin(), ints.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_policy_table: " + path + " has the wrong shape: " + e.what());
  }
  const size_t width = static_cast<size_t>(dp->axes[0].hi - dp->axes[0].lo + 1);
  for (const auto& layer : dp->argmax) {
    if (layer.size() != width) {
      throw ConfigError("load_policy_table: argmax layer width does not match the axis");
    }
    for (uint8_t v : layer) {
      if (v >= dp->sigma_levels.size()) {
        throw ConfigError("load_policy_table: argmax entry outside the sigma levels");
      }
    }
  }
  return dp;
}

}  // namespace sublin
