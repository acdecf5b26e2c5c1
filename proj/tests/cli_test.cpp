// End-to-end tests for the sublin-gbm command-line tool.  Each test spawns the
// real binary (path injected via SUBLIN_GBM_PATH), captures stdout/stderr and
// the exit code, and inspects the artifacts written to a throwaway directory.
//
// The parent test runner may itself be run with SUBLIN_SEED set, so every
// invocation scrubs it first (`env -u SUBLIN_SEED`) and the seed-precedence
// test re-adds it explicitly.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sublin/report.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string tool_path() { return SUBLIN_GBM_PATH; }

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sublin_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path.string() : (path / leaf).string();
  }
};

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs `sublin-gbm <args>` through the shell.  `env_assignments` is a
// space-separated list of NAME=VALUE pairs added after SUBLIN_SEED is scrubbed
// from the inherited environment.
CliResult run_cli(const std::string& args, const TempDir& scratch,
                  const std::string& env_assignments = "") {
  const fs::path out_file = scratch.path / "stdout.txt";
  const fs::path err_file = scratch.path / "stderr.txt";
  std::string cmd = "env -u SUBLIN_SEED ";
  if (!env_assignments.empty()) cmd += env_assignments + " ";
  cmd += "'" + tool_path() + "' " + args;
  cmd += " > '" + out_file.string() + "' 2> '" + err_file.string() + "'";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// A coarse PDE grid keeps the spawned solves fast; the fine-grid accuracy
// budget is exercised by the acceptance suite, not here.
std::string write_coarse_config(const TempDir& dir, const std::string& out_subdir) {
  const ordered_json doc = {{"pde", {{"dx", 0.05}}},
                            {"output", {{"dir", dir.str(out_subdir)}}}};
  const std::string path = dir.str("config.json");
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  return path;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

}  // namespace

TEST(Cli, NoSubcommandIsAUsageError) {
  TempDir tmp;
  const auto r = run_cli("", tmp);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, UnknownSubcommandIsAUsageError) {
  TempDir tmp;
  const auto r = run_cli("frobnicate", tmp);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, HelpExitsCleanly) {
  TempDir tmp;
  const auto r = run_cli("--help", tmp);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pde"), std::string::npos);
  EXPECT_NE(r.out.find("verify"), std::string::npos);
  EXPECT_NE(r.out.find("report"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyIsAUsageError) {
  TempDir tmp;
  const ordered_json doc = {{"pde", {{"dy", 0.1}}}};
  {
    std::ofstream out(tmp.str("bad.json"));
    out << doc.dump() << "\n";
  }
  const auto r = run_cli("--config '" + tmp.str("bad.json") + "' expect", tmp);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("pde.dy"), std::string::npos) << r.err;
}

TEST(Cli, ExpectPrintsTheSecondMomentAndWritesASidecar) {
  TempDir tmp;
  const std::string cfg = write_coarse_config(tmp, "out");
  const auto r =
      run_cli("--config '" + cfg + "' expect --phi clamped_square:100 --T 1 --x 0", tmp);
  ASSERT_EQ(r.code, 0) << r.err;
  const double value = std::stod(r.out);
  EXPECT_NEAR(value, 1.0, 2e-2);

  // Exactly one expectation artifact, stamped with the resolved config + seed.
  int artifacts = 0;
  for (const auto& entry : fs::directory_iterator(tmp.str("out"))) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("expect_", 0) == 0) {
      ++artifacts;
      const ordered_json meta = ordered_json::parse(slurp(entry.path()));
      EXPECT_EQ(meta.at("artifact").at("kind"), "expectation");
      EXPECT_DOUBLE_EQ(meta.at("artifact").at("value").get<double>(), value);
      EXPECT_EQ(meta.at("seed").get<uint64_t>(), 424242u);
      EXPECT_TRUE(meta.contains("config"));
    }
  }
  EXPECT_EQ(artifacts, 1);
}

TEST(Cli, PdeWritesTheProfileCsvWithMetadata) {
  TempDir tmp;
  const std::string cfg = write_coarse_config(tmp, "out");
  const std::string csv = tmp.str("profile.csv");
  const auto r =
      run_cli("--config '" + cfg + "' pde --phi clamped_abs --T 1 --out '" + csv + "'", tmp);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote"), std::string::npos);

  ASSERT_TRUE(fs::exists(csv));
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,u");
  // [-8, 8] at dx = 0.05: 321 interior rows.
  EXPECT_EQ(count_lines(slurp(csv)), 1 + 321);

  const ordered_json meta = ordered_json::parse(slurp(csv + ".json"));
  EXPECT_EQ(meta.at("artifact").at("kind"), "pde_profile");
  EXPECT_EQ(meta.at("artifact").at("csv"), csv);
  EXPECT_GT(meta.at("artifact").at("n_steps").get<int>(), 0);
  EXPECT_LE(meta.at("artifact").at("cfl").get<double>(), 1.0 + 1e-12);
}

TEST(Cli, LatticeSecondMomentIsExactOnTheDyadicGrid) {
  TempDir tmp;
  const std::string cfg = write_coarse_config(tmp, "out");
  const auto r = run_cli(
      "--config '" + cfg + "' lattice --phi clamped_square:100 --state base --T 1 --steps 16",
      tmp);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(r.out), 1.0, 1e-9);
}

TEST(Cli, LatticeRejectsAnUnknownState) {
  TempDir tmp;
  const auto r = run_cli("lattice --state hyperbolic --steps 4", tmp);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown state"), std::string::npos) << r.err;
}

TEST(Cli, SimulateWritesTheBundleCsvAndHonorsSeedPrecedence) {
  TempDir tmp;
  const std::string cfg = write_coarse_config(tmp, "out");
  // Global options (--config, --seed) precede the subcommand.
  const std::string sim =
      " simulate --paths 2 --steps 4 --T 1 --policy const:0.5 --out '";
  const std::string common = "--config '" + cfg + "'" + sim;

  // Config seed (424242) applies when neither the env var nor the flag is set.
  auto r = run_cli(common + tmp.str("a.csv") + "'", tmp);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(tmp.str("a.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "path_id,t,B,sigma,QV,L");
  EXPECT_EQ(count_lines(csv), 1 + 2 * (4 + 1));
  EXPECT_EQ(ordered_json::parse(slurp(tmp.str("a.csv.json"))).at("seed").get<uint64_t>(),
            424242u);

  // SUBLIN_SEED overrides the config...
  r = run_cli(common + tmp.str("b.csv") + "'", tmp, "SUBLIN_SEED=123");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ordered_json::parse(slurp(tmp.str("b.csv.json"))).at("seed").get<uint64_t>(), 123u);

  // ...and an explicit --seed flag overrides both.
  r = run_cli("--config '" + cfg + "' --seed 77" + sim + tmp.str("c.csv") + "'", tmp,
              "SUBLIN_SEED=123");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ordered_json::parse(slurp(tmp.str("c.csv.json"))).at("seed").get<uint64_t>(), 77u);

  // Identical seeds must reproduce the bundle byte for byte.
  r = run_cli(common + tmp.str("b2.csv") + "'", tmp, "SUBLIN_SEED=123");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(tmp.str("b2.csv")), slurp(tmp.str("b.csv")));
  EXPECT_NE(slurp(tmp.str("a.csv")), slurp(tmp.str("b.csv")));

  // A malformed seed in the environment is a configuration error.
  r = run_cli(common + tmp.str("d.csv") + "'", tmp, "SUBLIN_SEED=banana");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("SUBLIN_SEED"), std::string::npos) << r.err;
}

TEST(Cli, SimulateRejectsAPolicyOutsideTheBand) {
  TempDir tmp;
  const auto r = run_cli("simulate --policy const:2.0 --paths 2 --steps 4", tmp);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, EnvelopeReportsPerPolicyValuesAndTheDpAnchor) {
  TempDir tmp;
  const std::string cfg = write_coarse_config(tmp, "out");
  const auto r = run_cli("--config '" + cfg +
                             "' envelope --phi clamped_abs --policies const:0.5,const:1.0 "
                             "--paths 500 --steps 16 --T 1",
                         tmp);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("best:"), std::string::npos);
  EXPECT_NE(r.out.find("dp upper value:"), std::string::npos);

  int artifacts = 0;
  for (const auto& entry : fs::directory_iterator(tmp.str("out"))) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("envelope_", 0) == 0) {
      ++artifacts;
      const ordered_json meta = ordered_json::parse(slurp(entry.path()));
      EXPECT_EQ(meta.at("artifact").at("kind"), "policy_envelope");
      EXPECT_EQ(meta.at("artifact").at("per_policy").size(), 2u);
      // The family tops out at the upper volatility, so the best estimate
      // sits at or below the DP value up to Monte Carlo noise.
      const double best = meta.at("artifact").at("best_value").get<double>();
      const double se = meta.at("artifact").at("best_stderr").get<double>();
      const double dp = meta.at("artifact").at("dp_value").get<double>();
      EXPECT_LE(best, dp + 4 * se + 1e-9);
    }
  }
  EXPECT_EQ(artifacts, 1);
}

TEST(Cli, VerifyUnknownCheckIsAUsageError) {
  TempDir tmp;
  const auto r = run_cli("verify spectral", tmp);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown check"), std::string::npos) << r.err;
}

TEST(Cli, VerifyThenReportRoundTripsThroughTheArtifacts) {
  TempDir tmp;
  const auto r = run_cli("--out-dir '" + tmp.str("run") + "' verify perturbation", tmp);
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("[PASS]"), std::string::npos);
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);

  const std::string dir = tmp.str("run") + "/verify";
  ASSERT_TRUE(fs::exists(dir + "/run_config.json"));
  // Every emitted report must load back through the schema.
  int loaded = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "run_config.json") continue;
    const auto rep = sublin::CheckReport::load(entry.path().string());
    EXPECT_TRUE(rep.pass) << rep.check;
    ++loaded;
  }
  EXPECT_GE(loaded, 1);

  auto agg = run_cli("report --dir '" + dir + "'", tmp);
  EXPECT_EQ(agg.code, 0) << agg.err;
  EXPECT_NE(agg.out.find("| check |"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir + "/summary.md"));
  EXPECT_TRUE(fs::exists(dir + "/index.json"));

  agg = run_cli("report --dir '" + dir + "' --strict", tmp);
  EXPECT_EQ(agg.code, 0) << agg.err;

  // Inject a failing report: plain aggregation still succeeds, strict
  // aggregation flips to exit 1.
  sublin::CheckReport failing;
  failing.check = "synthetic/forced_failure";
  failing.pass = false;
  failing.seed = 1;
  failing.runtime_s = 0.0;
  failing.save(dir + "/synthetic_forced_failure.json");

  agg = run_cli("report --dir '" + dir + "'", tmp);
  EXPECT_EQ(agg.code, 0) << agg.err;
  agg = run_cli("report --dir '" + dir + "' --strict", tmp);
  EXPECT_EQ(agg.code, 1) << agg.out;
  EXPECT_NE(agg.out.find("synthetic/forced_failure"), std::string::npos);
}

TEST(Cli, ReportOnAnEmptyDirectoryIsAUsageError) {
  TempDir tmp;
  fs::create_directories(tmp.str("empty"));
  const auto r = run_cli("report --dir '" + tmp.str("empty") + "'", tmp);
  EXPECT_EQ(r.code, 2);
}
