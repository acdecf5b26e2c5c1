#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sublin/config.hpp"
#include "sublin/errors.hpp"
#include "sublin/report.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using sublin::CheckReport;
using sublin::ConfigError;
using sublin::RunConfig;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

CheckReport sample_report(const std::string& name, bool pass) {
  CheckReport r;
  r.check = name;
  r.params = {{"steps", 16}, {"band", {0.25, 1.0}}};
  r.measured = {{"worst_gap", 0.0125}};
  r.bound = {{"worst_gap", 0.02}};
  r.tol = {{"abs", 1e-12}};
  r.pass = pass;
  r.seed = 424242;
  r.runtime_s = 0.125;
  return r;
}

// ---------------------------------------------------------------------------
// Check reports.

TEST(CheckReport, JsonShapeAndRoundTrip) {
  const auto r = sample_report("area/check_name", true);
  const auto j = r.to_json();
  const std::string dump = j.dump();
  EXPECT_EQ(dump.rfind("{\"check\"", 0), 0u) << dump;  // stable leading key
  const auto back = CheckReport::from_json(j);
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.schema_version, 1);
  EXPECT_DOUBLE_EQ(back.runtime_s, 0.125);
}

TEST(CheckReport, SaveLoadRoundTrip) {
  TempDir dir("sublin_report_roundtrip");
  const auto file = (dir.path() / "r.json").string();
  const auto r = sample_report("roundtrip/example", false);
  r.save(file);
  EXPECT_EQ(CheckReport::load(file), r);
}

TEST(CheckReport, FromJsonRequiresEveryField) {
  auto j = sample_report("x", true).to_json();
  j.erase("measured");
  EXPECT_THROW(CheckReport::from_json(j), nlohmann::json::exception);
}

TEST(CheckReport, LoadDiagnosesBadFiles) {
  TempDir dir("sublin_report_badfiles");
  const auto garbled = (dir.path() / "garbled.json").string();
  std::ofstream(garbled) << "{\"check\": ";
  try {
    CheckReport::load(garbled);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("not valid JSON"), std::string::npos) << e.what();
  }

  const auto wrong_shape = (dir.path() / "shape.json").string();
  std::ofstream(wrong_shape) << "{\"check\": \"x\", \"pass\": true}";
  try {
    CheckReport::load(wrong_shape);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("report schema"), std::string::npos) << e.what();
  }

  EXPECT_THROW(CheckReport::load((dir.path() / "missing.json").string()), ConfigError);
}

TEST(ReportIndex, AggregatesADirectoryAndSkipsNonReports) {
  TempDir dir("sublin_report_aggregate");
  sample_report("suite/passing", true).save((dir.path() / "a_pass.json").string());
  sample_report("suite/failing", false).save((dir.path() / "b_fail.json").string());
  std::ofstream((dir.path() / "c_malformed.json").string()) << "{not json";
  // The aggregator's own output and the run stamp must not be re-ingested.
  std::ofstream((dir.path() / "index.json").string()) << "{\"n_pass\": 99}";
  std::ofstream((dir.path() / "run_config.json").string()) << "{\"band\": {}}";
  std::ofstream((dir.path() / "notes.txt").string()) << "not a json file";

  const auto index = sublin::aggregate_reports(dir.path().string());
  EXPECT_EQ(index.n_pass, 1);
  EXPECT_EQ(index.n_fail, 1);
  ASSERT_EQ(index.reports.size(), 2u);
  ASSERT_EQ(index.skipped_files.size(), 1u);
  EXPECT_NE(index.skipped_files[0].find("c_malformed.json"), std::string::npos);

  const auto md = index.to_markdown();
  EXPECT_NE(md.find("suite/passing"), std::string::npos);
  EXPECT_NE(md.find("PASS"), std::string::npos);
  EXPECT_NE(md.find("FAIL"), std::string::npos);
  EXPECT_NE(md.find("1 passed, 1 failed"), std::string::npos);
  EXPECT_NE(md.find("1 file(s) skipped"), std::string::npos);

  const auto j = index.to_json();
  EXPECT_EQ(j.at("n_pass").get<int>(), 1);
  EXPECT_EQ(j.at("reports").size(), 2u);
}

TEST(ReportIndex, RejectsEmptyOrMissingDirectories) {
  TempDir dir("sublin_report_empty");
  EXPECT_THROW(sublin::aggregate_reports(dir.path().string()), ConfigError);
  EXPECT_THROW(sublin::aggregate_reports((dir.path() / "nope").string()), ConfigError);
}

// ---------------------------------------------------------------------------
// Run configuration.

TEST(RunConfig, DefaultsValidateAndExposeTheDocumentedValues) {
  const RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.band.sigma_lower_sq, 0.25);
  EXPECT_DOUBLE_EQ(cfg.band.sigma_upper_sq, 1.0);
  EXPECT_DOUBLE_EQ(cfg.pde.dx, 0.01);
  EXPECT_DOUBLE_EQ(cfg.pde.halfwidth, 8.0);
  EXPECT_EQ(cfg.lattice.steps, 256);
  EXPECT_EQ(cfg.lattice.scheme, "rademacher");
  EXPECT_EQ(cfg.mc.paths, 100000L);
  EXPECT_EQ(cfg.mc.seed, 424242u);
  EXPECT_FALSE(cfg.tilde.has_value());
  const auto round = RunConfig::from_json(ordered_json::object());
  EXPECT_EQ(round.to_json().dump(), cfg.to_json().dump());
}

TEST(RunConfig, UnknownKeysAreNamedInTheError) {
  try {
    RunConfig::from_json(ordered_json{{"bands", ordered_json::object()}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bands"), std::string::npos) << e.what();
  }
  try {
    RunConfig::from_json(ordered_json{{"pde", {{"dy", 0.01}}}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("pde.dy"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, ValidatesCrossFieldPreconditions) {
  // Reversed band.
  EXPECT_THROW(RunConfig::from_json(ordered_json{
                   {"band", {{"sigma_lower_sq", 2.0}, {"sigma_upper_sq", 1.0}}}}),
               ConfigError);
  // Asymmetric spatial domain.
  EXPECT_THROW(
      RunConfig::from_json(ordered_json{{"pde", {{"domain", {-4.0, 6.0}}}}}),
      ConfigError);
  // Symmetric domain is folded into the halfwidth.
  EXPECT_DOUBLE_EQ(
      RunConfig::from_json(ordered_json{{"pde", {{"domain", {-4.0, 4.0}}}}}).pde.halfwidth,
      4.0);
  // Explicit time step beyond the stability bound.
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"pde", {{"dx", 0.01}, {"dt", 0.001}}}}),
               ConfigError);
  // dt = 0 means "largest stable step" and passes.
  EXPECT_NO_THROW(RunConfig::from_json(ordered_json{{"pde", {{"dx", 0.01}, {"dt", 0.0}}}}));
  // Increment scheme whitelist.
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"lattice", {{"scheme", "gauss:0"}}}}),
               ConfigError);
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"lattice", {{"scheme", "uniform"}}}}),
               ConfigError);
  // Counts.
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"lattice", {{"steps", 0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"lattice", {{"sigma_levels", 1}}}}),
               ConfigError);
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"lattice", {{"subdiv", 0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"mc", {{"paths", 1}}}}), ConfigError);
  // Verify / output whitelists.
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"verify", {{"checks", {"spectral"}}}}}),
               ConfigError);
  EXPECT_THROW(
      RunConfig::from_json(ordered_json{{"verify", {{"checks", ordered_json::array()}}}}),
      ConfigError);
  EXPECT_THROW(RunConfig::from_json(ordered_json{{"output", {{"formats", {"xml"}}}}}),
               ConfigError);
  // Dominated generator with a slope above upper/2.
  EXPECT_THROW(RunConfig::from_json(ordered_json{
                   {"tilde", {{"breakpoints", {-1.0, 1.0}}, {"slopes", {0.2, 0.55, 0.5}}}}}),
               ConfigError);
}

TEST(RunConfig, ParsesACompleteDocumentAndRoundTrips) {
  const ordered_json doc = {
      {"band", {{"sigma_lower_sq", 0.5}, {"sigma_upper_sq", 2.0}}},
      {"tilde", {{"breakpoints", {-0.5, 0.5}}, {"slopes", {0.3, 0.6, 0.9}}}},
      {"pde", {{"dx", 0.02}, {"dt", 0.0}, {"domain", {-6.0, 6.0}}, {"clamp", 50.0}}},
      {"lattice",
       {{"steps", 64}, {"sigma_levels", 3}, {"scheme", "gauss:8"}, {"subdiv", 4}}},
      {"mc", {{"paths", 5000}, {"seed", 7}}},
      {"verify", {{"checks", {"levy", "reflection"}}, {"tolerances", {{"max_gap", 0.05}}}}},
      {"output", {{"dir", "artifacts"}, {"formats", {"json"}}}},
  };
  const auto cfg = RunConfig::from_json(doc);
  EXPECT_DOUBLE_EQ(cfg.band.sigma_upper_sq, 2.0);
  ASSERT_TRUE(cfg.tilde.has_value());
  EXPECT_DOUBLE_EQ(cfg.tilde->slopes()[1], 0.6);
  EXPECT_DOUBLE_EQ(cfg.pde.halfwidth, 6.0);
  EXPECT_DOUBLE_EQ(cfg.pde.clamp, 50.0);
  EXPECT_EQ(cfg.lattice.scheme, "gauss:8");
  EXPECT_EQ(cfg.mc.paths, 5000L);
  EXPECT_EQ(cfg.mc.seed, 7u);
  ASSERT_EQ(cfg.verify.checks.size(), 2u);
  EXPECT_EQ(cfg.output.dir, "artifacts");
  const auto again = RunConfig::from_json(cfg.to_json());
  EXPECT_EQ(again.to_json().dump(), cfg.to_json().dump());
}

TEST(RunConfig, LoadsFromDiskWithDiagnostics) {
  TempDir dir("sublin_config_load");
  const auto good = (dir.path() / "good.json").string();
  std::ofstream(good) << "{\"lattice\": {\"steps\": 32}}";
  EXPECT_EQ(RunConfig::load(good).lattice.steps, 32);
  const auto bad = (dir.path() / "bad.json").string();
  std::ofstream(bad) << "{\"lattice\": ";
  EXPECT_THROW(RunConfig::load(bad), ConfigError);
  EXPECT_THROW(RunConfig::load((dir.path() / "absent.json").string()), ConfigError);
}

TEST(RunConfig, MapsOntoVerifyOptions) {
  ordered_json doc = {
      {"band", {{"sigma_lower_sq", 0.36}, {"sigma_upper_sq", 1.44}}},
      {"pde", {{"dx", 0.02}, {"domain", {-6.0, 6.0}}}},
      {"lattice", {{"steps", 128}, {"sigma_levels", 3}}},
      {"mc", {{"paths", 2500}, {"seed", 99}}},
  };
  const auto opts = RunConfig::from_json(doc).verify_options();
  EXPECT_DOUBLE_EQ(opts.band.sigma_lower_sq, 0.36);
  EXPECT_DOUBLE_EQ(opts.band.sigma_upper_sq, 1.44);
  EXPECT_EQ(opts.seed, 99u);
  EXPECT_EQ(opts.sigma_levels, 3);
  EXPECT_EQ(opts.mc_paths, 2500L);
  EXPECT_EQ(opts.mc_steps, 128);
  EXPECT_DOUBLE_EQ(opts.pde_dx, 0.02);
  EXPECT_DOUBLE_EQ(opts.pde_halfwidth, 6.0);
}

TEST(RunConfig, TildeOrDefaultScalesWithTheBand) {
  const RunConfig def;
  const auto g = def.tilde_or_default();
  ASSERT_EQ(g.slopes().size(), 3u);
  EXPECT_NEAR(g.slopes()[0], 0.2, 1e-15);
  EXPECT_NEAR(g.slopes()[1], 0.35, 1e-15);
  EXPECT_DOUBLE_EQ(g.slopes()[2], 0.5);
  ASSERT_EQ(g.breakpoints().size(), 2u);
  EXPECT_DOUBLE_EQ(g.breakpoints()[0], -1.0);
  EXPECT_DOUBLE_EQ(g.breakpoints()[1], 1.0);

  auto cfg = RunConfig::from_json(
      ordered_json{{"band", {{"sigma_lower_sq", 0.5}, {"sigma_upper_sq", 2.0}}}});
  const auto wide = cfg.tilde_or_default();
  EXPECT_NEAR(wide.slopes()[0], 0.4, 1e-15);
  EXPECT_NEAR(wide.slopes()[1], 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(wide.slopes()[2], 1.0);
  // Configured generators pass through untouched.
  const auto custom = RunConfig::from_json(ordered_json{
      {"tilde", {{"breakpoints", {0.0}}, {"slopes", {0.25, 0.25}}}}});
  ASSERT_TRUE(custom.tilde.has_value());
  EXPECT_DOUBLE_EQ(custom.tilde_or_default().slopes()[0], 0.25);
}

}  // namespace
