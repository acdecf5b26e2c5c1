#include "sublin/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sublin/errors.hpp"

namespace sublin {

nlohmann::ordered_json CheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["check"] = check;
  j["params"] = params;
  j["measured"] = measured;
  j["bound"] = bound;
  j["tol"] = tol;
  j["pass"] = pass;
  j["seed"] = seed;
  j["runtime_s"] = runtime_s;
  j["schema_version"] = schema_version;
  return j;
}

CheckReport CheckReport::from_json(const nlohmann::ordered_json& j) {
  CheckReport r;
  r.check = j.at("check").get<std::string>();
  r.params = j.at("params");
  r.measured = j.at("measured");
  r.bound = j.at("bound");
  r.tol = j.at("tol");
  r.pass = j.at("pass").get<bool>();
  r.seed = j.at("seed").get<uint64_t>();
  r.runtime_s = j.at("runtime_s").get<double>();
  r.schema_version = j.at("schema_version").get<int>();
  return r;
}

void CheckReport::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("report: cannot open " + path + " for writing");
  os << to_json().dump(2) << '\n';
}

CheckReport CheckReport::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("report: cannot open " + path);
  nlohmann::ordered_json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("report: " + path + " is not valid JSON: " + e.what());
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("report: " + path + " does not match the report schema: " + e.what());
  }
}

std::string ReportIndex::to_markdown() const {
  std::ostringstream os;
  os << "| check | pass | seed | runtime_s |\n";
  os << "|---|---|---|---|\n";
  for (const auto& r : reports) {
    os << "| " << r.check << " | " << (r.pass ? "PASS" : "FAIL") << " | " << r.seed << " | "
       << r.runtime_s << " |\n";
  }
  os << "\n" << n_pass << " passed, " << n_fail << " failed";
  if (!skipped_files.empty()) {
    os << ", " << skipped_files.size() << " file(s) skipped:";
    for (const auto& s : skipped_files) os << "\n  - " << s;
  }
  os << "\n";
  return os.str();
}

nlohmann::ordered_json ReportIndex::to_json() const {
  nlohmann::ordered_json j;
  j["n_pass"] = n_pass;
  j["n_fail"] = n_fail;
  j["skipped_files"] = skipped_files;
  auto& rows = j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    rows.push_back({{"check", r.check}, {"pass", r.pass}, {"runtime_s", r.runtime_s}});
  }
  return j;
}

ReportIndex aggregate_reports(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ConfigError("report: " + dir + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    // index.json is this aggregator's own output and run_config.json is the
    // run stamp; neither is a check report.
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename() != "index.json" &&
        entry.path().filename() != "run_config.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  ReportIndex index;
  for (const auto& f : files) {
    try {
      index.reports.push_back(CheckReport::load(f.string()));
    } catch (const ConfigError& e) {
      index.skipped_files.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (index.reports.empty() && index.skipped_files.empty()) {
    throw ConfigError("report: no report JSON files in " + dir);
  }
  for (const auto& r : index.reports) (r.pass ? index.n_pass : index.n_fail) += 1;
  return index;
}

}  // namespace sublin
