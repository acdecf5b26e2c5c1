#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sublin {

// One quantitative check: what was measured, the bound or target it was held
// against, the tolerance, and the verdict. params echoes every input needed
// to reproduce the run; all fields except runtime_s are deterministic
// functions of (params, seed).
struct CheckReport {
  std::string check;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json measured = nlohmann::ordered_json::object();
  nlohmann::ordered_json bound = nlohmann::ordered_json::object();
  nlohmann::ordered_json tol = nlohmann::ordered_json::object();
  bool pass = false;
  uint64_t seed = 0;
  double runtime_s = 0.0;
  int schema_version = 1;

  nlohmann::ordered_json to_json() const;
  static CheckReport from_json(const nlohmann::ordered_json& j);

  void save(const std::string& path) const;
  static CheckReport load(const std::string& path);

  friend bool operator==(const CheckReport&, const CheckReport&) = default;
};

// Aggregation of a directory of report JSONs: pass/fail matrix (markdown
// table) plus a machine-readable index. Malformed files are skipped with a
// warning entry; an empty directory raises ConfigError.
struct ReportIndex {
  std::vector<CheckReport> reports;
  std::vector<std::string> skipped_files;  // malformed JSON, with reason
  int n_pass = 0;
  int n_fail = 0;

  std::string to_markdown() const;
  nlohmann::ordered_json to_json() const;
};

ReportIndex aggregate_reports(const std::string& dir);

}  // namespace sublin
