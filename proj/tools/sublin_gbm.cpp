// sublin-gbm: command-line front end for the sublinear-expectation engine.
//
// Subcommands: pde, expect, lattice, simulate, envelope, verify, report.
// Exit codes: 0 success / all checks passed, 1 at least one check failed,
// 2 configuration or usage error, 3 numerical failure. SUBLIN_SEED overrides
// the configured seed; an explicit --seed flag overrides both.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sublin/config.hpp"
#include "sublin/envelope.hpp"
#include "sublin/errors.hpp"
#include "sublin/lattice.hpp"
#include "sublin/pathspace.hpp"
#include "sublin/pde.hpp"
#include "sublin/policy.hpp"
#include "sublin/report.hpp"
#include "sublin/rng.hpp"
#include "sublin/tilde.hpp"
#include "sublin/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sublin;

namespace {

struct Context {
  RunConfig cfg;
  std::string out_dir;
  uint64_t seed = 0;
};

uint64_t parse_seed_text(const std::string& text, const std::string& origin) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return static_cast<uint64_t>(v);
  } catch (const std::logic_error&) {
    throw ConfigError(origin + " must be an unsigned integer, got '" + text + "'");
  }
}

Context make_context(const std::string& config_path, const std::string& out_dir_flag,
                     bool seed_given, uint64_t seed_flag) {
  Context ctx;
  ctx.cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
  ctx.out_dir = out_dir_flag.empty() ? ctx.cfg.output.dir : out_dir_flag;
  ctx.seed = ctx.cfg.mc.seed;
  if (const char* env = std::getenv("SUBLIN_SEED")) {
    ctx.seed = parse_seed_text(env, "SUBLIN_SEED");
  }
  if (seed_given) ctx.seed = seed_flag;
  return ctx;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

// Resolved configuration + seed, embedded in every artifact so a run can be
// reproduced from the artifact alone.
ordered_json run_stamp(const Context& ctx) {
  return {{"config", ctx.cfg.to_json()}, {"seed", ctx.seed}, {"rng", kRngId}};
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.imbue(std::locale::classic());
  out.precision(17);
  return out;
}

std::string sanitize(const std::string& name) {
  std::string s;
  for (char c : name) {
    s.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return s;
}

// --------------------------------------------------------------------------
// pde: march the terminal function and export the profile.

int cmd_pde(const Context& ctx, const std::string& phi_text, double horizon, double x_eval,
            std::string out_path, bool use_tilde) {
  const auto phi = TestFunction::parse(phi_text, ctx.cfg.pde.clamp);
  const auto grid = SpatialGrid::make(-ctx.cfg.pde.halfwidth, ctx.cfg.pde.halfwidth,
                                      ctx.cfg.pde.dx);
  const Nonlinearity h = use_tilde ? Nonlinearity::from(ctx.cfg.tilde_or_default())
                                   : Nonlinearity::from(SublinearGenerator(ctx.cfg.band));
  PdeConfig pc;
  pc.horizon = horizon;
  pc.dt = ctx.cfg.pde.dt;
  pc.clamp = ctx.cfg.pde.clamp;
  SolveStats stats;
  const GridFunction u = solve(h, phi, pc, grid, &stats);

  ensure_dir(ctx.out_dir);
  if (out_path.empty()) out_path = ctx.out_dir + "/pde_" + sanitize(phi.name) + ".csv";
  auto csv = open_csv(out_path);
  csv << "x,u\n";
  for (int j = 0; j < grid.n_nodes; ++j) csv << grid.x(j) << "," << u.values[j] << "\n";

  ordered_json meta = run_stamp(ctx);
  meta["artifact"] = {{"kind", "pde_profile"},
                      {"phi", phi.name},
                      {"generator", h.name},
                      {"horizon", horizon},
                      {"dt_used", stats.dt},
                      {"n_steps", stats.n_steps},
                      {"cfl", stats.cfl},
                      {"x", x_eval},
                      {"value_at_x", u.interpolate(x_eval)},
                      {"csv", out_path}};
  write_json(out_path + ".json", meta);

  std::cout.precision(17);
  std::cout << "u(" << x_eval << ") = " << u.interpolate(x_eval) << "\n"
            << "steps=" << stats.n_steps << " dt=" << stats.dt << " cfl=" << stats.cfl
            << "\nwrote " << out_path << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// expect: boundary-guarded scalar expectation from the PDE.

int cmd_expect(const Context& ctx, const std::string& phi_text, double horizon, double x_eval) {
  const auto phi = TestFunction::parse(phi_text, ctx.cfg.pde.clamp);
  const auto grid = SpatialGrid::make(-ctx.cfg.pde.halfwidth, ctx.cfg.pde.halfwidth,
                                      ctx.cfg.pde.dx);
  const Nonlinearity h = Nonlinearity::from(SublinearGenerator(ctx.cfg.band));
  const double value = g_expectation(h, phi, horizon, x_eval, grid, ctx.cfg.pde.dt);

  ensure_dir(ctx.out_dir);
  ordered_json meta = run_stamp(ctx);
  meta["artifact"] = {{"kind", "expectation"},
                      {"phi", phi.name},
                      {"horizon", horizon},
                      {"x", x_eval},
                      {"value", value}};
  const std::string path = ctx.out_dir + "/expect_" + sanitize(phi.name) + ".json";
  write_json(path, meta);

  std::cout.precision(17);
  std::cout << value << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// lattice: DP value of phi applied to a path statistic.

StateSpec parse_state(const std::string& text) {
  if (text == "base") return StateSpec::base_only();
  if (text == "running_max") return StateSpec::running_max();
  if (text == "reflected_gap") return StateSpec::reflected_gap();
  if (text == "gap_and_max") return StateSpec::gap_and_max();
  if (text == "signed_sum") return StateSpec::signed_sum();
  if (text.rfind("tanaka:", 0) == 0) {
    try {
      return StateSpec::tanaka(std::stod(text.substr(7)));
    } catch (const std::logic_error&) {
      throw ConfigError("lattice: cannot parse tanaka level in '" + text + "'");
    }
  }
  throw ConfigError("lattice: unknown state '" + text +
                    "' (valid: base, running_max, reflected_gap, gap_and_max, "
                    "tanaka:<level>, signed_sum)");
}

int cmd_lattice(const Context& ctx, const std::string& phi_text, const std::string& state_text,
                double horizon, int steps, const std::string& policy_out, bool use_tilde) {
  const auto phi = TestFunction::parse(phi_text, ctx.cfg.pde.clamp);
  const auto spec = parse_state(state_text);
  const auto partition = TimePartition::uniform(horizon, steps);
  // phi reads the last state coordinate: the base value for "base", the
  // statistic itself for the augmented states.
  const StatePayoff payoff = [&phi](std::span<const double> s) { return phi(s.back()); };

  double value = 0.0;
  if (use_tilde) {
    const auto gen = ctx.cfg.tilde_or_default();
    TildeConfig tc;
    tc.subdiv = ctx.cfg.lattice.subdiv;
    value = tilde_conditional_expectation(gen, payoff, partition, spec, tc);
  } else {
    const auto sigmas = SigmaSet::refined(ctx.cfg.band, ctx.cfg.lattice.sigma_levels);
    const auto scheme = IncrementScheme::parse(ctx.cfg.lattice.scheme);
    LatticeConfig lc;
    lc.subdiv = ctx.cfg.lattice.subdiv;
    lc.retain_policy = !policy_out.empty();
    const DpResult dp = dp_expectation(spec, payoff, partition, sigmas, scheme, lc);
    value = dp.value;
    if (!policy_out.empty()) {
      save_policy_table(policy_out, dp);
      std::cout << "wrote policy table " << policy_out << "\n";
    }
  }

  ensure_dir(ctx.out_dir);
  ordered_json meta = run_stamp(ctx);
  meta["artifact"] = {{"kind", "lattice_value"},
                      {"phi", phi.name},
                      {"state", state_text},
                      {"generator", use_tilde ? "tilde" : "band"},
                      {"horizon", horizon},
                      {"steps", steps},
                      {"value", value}};
  write_json(ctx.out_dir + "/lattice_" + sanitize(state_text) + "_" + sanitize(phi.name) +
                 ".json",
             meta);

  std::cout.precision(17);
  std::cout << value << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// simulate: export a path bundle as CSV.

int cmd_simulate(const Context& ctx, const std::string& policy_text, long n_paths,
                 double horizon, int steps, std::string out_path) {
  const auto policy = ControlPolicy::parse(policy_text, ctx.cfg.band);
  const auto partition = TimePartition::uniform(horizon, steps);
  const auto scheme = IncrementScheme::parse(ctx.cfg.lattice.scheme);
  const PathBundle bundle = simulate(policy.as_step_policy(), partition, scheme, ctx.seed,
                                     n_paths, policy.band_lo(), policy.band_hi());

  ensure_dir(ctx.out_dir);
  if (out_path.empty()) out_path = ctx.out_dir + "/paths.csv";
  auto csv = open_csv(out_path);
  write_bundle_csv(csv, bundle);

  ordered_json meta = run_stamp(ctx);
  meta["artifact"] = {{"kind", "path_bundle"},
                      {"policy", policy.name()},
                      {"paths", n_paths},
                      {"steps", steps},
                      {"horizon", horizon},
                      {"scheme", bundle.scheme_name},
                      {"csv", out_path}};
  write_json(out_path + ".json", meta);

  std::cout << "wrote " << n_paths << " paths (" << steps << " steps) to " << out_path << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// envelope: sup of Monte Carlo means over a policy family, with the DP value
// as the upper anchor.

int cmd_envelope(const Context& ctx, const std::string& phi_text,
                 const std::string& policies_text, long n_paths, double horizon, int steps) {
  const auto phi = TestFunction::parse(phi_text, ctx.cfg.pde.clamp);
  const auto partition = TimePartition::uniform(horizon, steps);
  const auto scheme = IncrementScheme::parse(ctx.cfg.lattice.scheme);
  const auto sigmas = SigmaSet::refined(ctx.cfg.band, ctx.cfg.lattice.sigma_levels);

  std::vector<ControlPolicy> family;
  std::string token;
  std::stringstream ss(policies_text);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) family.push_back(ControlPolicy::parse(token, ctx.cfg.band));
  }

  const PathStatistic stat = [&phi](const SamplePath& p) { return phi(p.values.back()); };
  const EnvelopeResult res =
      sup_over_policies(stat, family, partition, scheme, n_paths, ctx.seed);
  const double dp_value = lattice_expectation([&phi](double b) { return phi(b); }, partition,
                                              sigmas, scheme);

  ensure_dir(ctx.out_dir);
  ordered_json per = ordered_json::array();
  std::cout.precision(10);
  for (const auto& pe : res.per_policy) {
    per.push_back({{"policy", pe.policy},
                   {"value", pe.estimate.value},
                   {"stderr", pe.estimate.stderr_}});
    std::cout << pe.policy << ": " << pe.estimate.value << " +- " << pe.estimate.stderr_
              << "\n";
  }
  ordered_json meta = run_stamp(ctx);
  meta["artifact"] = {{"kind", "policy_envelope"},
                      {"phi", phi.name},
                      {"horizon", horizon},
                      {"steps", steps},
                      {"paths", n_paths},
                      {"best_policy", res.best_policy},
                      {"best_value", res.best.value},
                      {"best_stderr", res.best.stderr_},
                      {"dp_value", dp_value},
                      {"per_policy", per}};
  write_json(ctx.out_dir + "/envelope_" + sanitize(phi.name) + ".json", meta);

  std::cout << "best: " << res.best_policy << " = " << res.best.value << " +- "
            << res.best.stderr_ << "\n"
            << "dp upper value: " << dp_value << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// verify: run theorem checks and write one report JSON each.

int cmd_verify(const Context& ctx, std::string which) {
  VerifyOptions opts = ctx.cfg.verify_options();
  opts.seed = ctx.seed;

  std::vector<std::string> checks;
  if (which.empty()) {
    checks = ctx.cfg.verify.checks;
  } else {
    checks.push_back(which);
  }
  for (const auto& c : checks) {
    if (c == "all") {
      checks = {"levy", "reflection", "krylov", "density", "sgn", "perturbation"};
      break;
    }
  }

  std::vector<CheckReport> reports;
  auto take = [&reports](std::vector<CheckReport> v) {
    for (auto& r : v) reports.push_back(std::move(r));
  };
  for (const auto& c : checks) {
    if (c == "levy") {
      take(levy_reports(opts));
    } else if (c == "reflection") {
      take(reflection_reports(opts));
      take(reflection_tilde_reports(ctx.cfg.tilde_or_default(), opts));
    } else if (c == "krylov") {
      take(krylov_reports(opts));
    } else if (c == "density") {
      take(density_reports(opts));
    } else if (c == "sgn") {
      take(sgn_reports(opts));
    } else if (c == "perturbation") {
      take(perturbation_reports(opts));
    } else {
      throw ConfigError("verify: unknown check '" + c +
                        "' (valid: levy, reflection, krylov, density, sgn, perturbation, all)");
    }
  }

  const std::string dir = ctx.out_dir + "/verify";
  ensure_dir(dir);
  write_json(dir + "/run_config.json", run_stamp(ctx));

  bool all_pass = true;
  for (const auto& r : reports) {
    r.save(dir + "/" + sanitize(r.check) + ".json");
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.check << " (" << r.runtime_s << "s)\n";
  }
  std::cout << (all_pass ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
  return all_pass ? 0 : 1;
}

// --------------------------------------------------------------------------
// report: aggregate report JSONs into a matrix + index.

int cmd_report(const Context& ctx, std::string dir, bool strict) {
  if (dir.empty()) dir = ctx.out_dir + "/verify";
  const ReportIndex idx = aggregate_reports(dir);
  for (const auto& s : idx.skipped_files) std::cerr << "warning: skipped " << s << "\n";

  const std::string md = idx.to_markdown();
  {
    std::ofstream out(dir + "/summary.md");
    if (!out) throw ConfigError("cannot write '" + dir + "/summary.md'");
    out << md;
  }
  write_json(dir + "/index.json", idx.to_json());
  std::cout << md;
  if (strict && idx.n_fail > 0) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sublinear-expectation engine for a volatility-uncertain diffusion"};
  app.require_subcommand(1);

  std::string config_path, out_dir_flag;
  uint64_t seed_flag = 0;
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--out-dir", out_dir_flag, "output directory (overrides config)");
  auto* seed_opt =
      app.add_option("--seed", seed_flag, "RNG seed (overrides SUBLIN_SEED and config)");

  // pde
  auto* pde_cmd = app.add_subcommand("pde", "march the terminal payoff and export the profile");
  std::string pde_phi = "clamped_abs";
  double pde_T = 1.0, pde_x = 0.0;
  std::string pde_out;
  bool pde_tilde = false;
  pde_cmd->add_option("--phi", pde_phi, "terminal payoff descriptor");
  pde_cmd->add_option("--T", pde_T, "horizon");
  pde_cmd->add_option("--x", pde_x, "evaluation point");
  pde_cmd->add_option("--out", pde_out, "CSV output path");
  pde_cmd->add_flag("--tilde", pde_tilde, "use the dominated generator");

  // expect
  auto* exp_cmd = app.add_subcommand("expect", "scalar expectation via the guarded PDE solve");
  std::string exp_phi = "clamped_abs";
  double exp_T = 1.0, exp_x = 0.0;
  exp_cmd->add_option("--phi", exp_phi, "terminal payoff descriptor");
  exp_cmd->add_option("--T", exp_T, "horizon");
  exp_cmd->add_option("--x", exp_x, "evaluation point");

  // lattice
  auto* lat_cmd = app.add_subcommand("lattice", "DP value of phi(statistic) on the lattice");
  std::string lat_phi = "clamped_abs", lat_state = "base", lat_policy_out;
  double lat_T = 1.0;
  int lat_steps = 0;
  bool lat_tilde = false;
  lat_cmd->add_option("--phi", lat_phi, "payoff descriptor applied to the statistic");
  lat_cmd->add_option("--state", lat_state,
                      "base | running_max | reflected_gap | gap_and_max | tanaka:<level> | "
                      "signed_sum");
  lat_cmd->add_option("--T", lat_T, "horizon");
  lat_cmd->add_option("--steps", lat_steps, "time steps (default: config lattice.steps)");
  lat_cmd->add_option("--save-policy", lat_policy_out, "write the argmax table as JSON");
  lat_cmd->add_flag("--tilde", lat_tilde,
                    "use the dominated generator (base and reflected_gap only)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "sample paths under a policy, export CSV");
  std::string sim_policy, sim_out;
  long sim_paths = 100;
  double sim_T = 1.0;
  int sim_steps = 0;
  sim_cmd->add_option("--policy", sim_policy, "const:<sigma> | bangbang:<thr> | table:<file>");
  sim_cmd->add_option("--paths", sim_paths, "number of paths");
  sim_cmd->add_option("--T", sim_T, "horizon");
  sim_cmd->add_option("--steps", sim_steps, "time steps (default: config lattice.steps)");
  sim_cmd->add_option("--out", sim_out, "CSV output path");

  // envelope
  auto* env_cmd =
      app.add_subcommand("envelope", "sup of Monte Carlo means over a policy family");
  std::string env_phi = "clamped_abs", env_policies;
  long env_paths = 0;
  double env_T = 1.0;
  int env_steps = 0;
  env_cmd->add_option("--phi", env_phi, "terminal payoff descriptor");
  env_cmd->add_option("--policies", env_policies, "comma-separated policy descriptors");
  env_cmd->add_option("--paths", env_paths, "paths per policy (default: config mc.paths)");
  env_cmd->add_option("--T", env_T, "horizon");
  env_cmd->add_option("--steps", env_steps, "time steps (default: config lattice.steps)");

  // verify
  auto* ver_cmd = app.add_subcommand("verify", "run theorem checks, one report JSON each");
  std::string ver_check;
  ver_cmd->add_option("check", ver_check,
                      "levy | reflection | krylov | density | sgn | perturbation | all "
                      "(default: config verify.checks)");

  // report
  auto* rep_cmd = app.add_subcommand("report", "aggregate report JSONs into a summary");
  std::string rep_dir;
  bool rep_strict = false;
  rep_cmd->add_option("--dir", rep_dir, "directory of report JSONs (default: <out>/verify)");
  rep_cmd->add_flag("--strict", rep_strict, "exit 1 when any aggregated check failed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors are configuration errors
  }

  try {
    Context ctx = make_context(config_path, out_dir_flag, seed_opt->count() > 0, seed_flag);
    if (app.got_subcommand(pde_cmd)) {
      return cmd_pde(ctx, pde_phi, pde_T, pde_x, pde_out, pde_tilde);
    }
    if (app.got_subcommand(exp_cmd)) return cmd_expect(ctx, exp_phi, exp_T, exp_x);
    if (app.got_subcommand(lat_cmd)) {
      const int steps = lat_steps > 0 ? lat_steps : ctx.cfg.lattice.steps;
      return cmd_lattice(ctx, lat_phi, lat_state, lat_T, steps, lat_policy_out, lat_tilde);
    }
    if (app.got_subcommand(sim_cmd)) {
      if (sim_policy.empty()) {
        sim_policy = "const:" + std::to_string(ctx.cfg.band.sigma_upper());
      }
      const int steps = sim_steps > 0 ? sim_steps : ctx.cfg.lattice.steps;
      return cmd_simulate(ctx, sim_policy, sim_paths, sim_T, steps, sim_out);
    }
    if (app.got_subcommand(env_cmd)) {
      if (env_policies.empty()) {
        env_policies = "const:" + std::to_string(ctx.cfg.band.sigma_lower()) +
                       ",const:" + std::to_string(ctx.cfg.band.sigma_upper()) + ",bangbang:0";
      }
      const long paths = env_paths > 0 ? env_paths : ctx.cfg.mc.paths;
      const int steps = env_steps > 0 ? env_steps : ctx.cfg.lattice.steps;
      return cmd_envelope(ctx, env_phi, env_policies, paths, env_T, steps);
    }
    if (app.got_subcommand(ver_cmd)) return cmd_verify(ctx, ver_check);
    if (app.got_subcommand(rep_cmd)) return cmd_report(ctx, rep_dir, rep_strict);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
