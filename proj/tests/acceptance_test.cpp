// Acceptance gate for the numerical engine: eleven quantitative criteria, one
// printed line each, with the tolerance and wall-clock budget enforced as part
// of the verdict.  Exits 0 only when every criterion passes.
//
// The criteria pin the shipped defaults: band (0.25, 1), seed 424242,
// Rademacher increments, five sigma levels, horizon 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/grid.hpp"
#include "sublin/increments.hpp"
#include "sublin/lattice.hpp"
#include "sublin/partition.hpp"
#include "sublin/pathspace.hpp"
#include "sublin/pde.hpp"
#include "sublin/product.hpp"
#include "sublin/report.hpp"
#include "sublin/test_functions.hpp"
#include "sublin/verify.hpp"

using namespace sublin;

namespace {

constexpr uint64_t kSeed = 424242;

struct Gate {
  bool all_ok = true;
  int n_failed = 0;

  void run(int id, const std::string& title, double budget_s,
           const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_s) {
      ok = false;
      detail += detail.empty() ? "" : "; ";
      detail += "over budget";
    }
    all_ok = all_ok && ok;
    n_failed += ok ? 0 : 1;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << title << " ("
              << std::fixed << std::setprecision(1) << secs << " s, budget "
              << std::setprecision(0) << budget_s << " s)\n";
    if (!ok && !detail.empty()) std::cout << "       " << detail << "\n";
    std::cout << std::flush;
  }
};

// Appends a failure note when cond is false; returns cond so callers can fold.
bool expect(bool cond, const std::string& what, std::string& detail) {
  if (!cond) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  return cond;
}

bool expect_near(double value, double target, double tol, const std::string& what,
                 std::string& detail) {
  const bool ok = std::isfinite(value) && std::abs(value - target) <= tol;
  if (!ok) {
    std::ostringstream os;
    os << what << ": got " << std::setprecision(12) << value << ", want " << target << " +- "
       << tol;
    std::string msg = os.str();
    if (!detail.empty()) detail += "; ";
    detail += msg;
  }
  return ok;
}

const CheckReport* find_report(const std::vector<CheckReport>& reports,
                               const std::string& name) {
  for (const auto& r : reports) {
    if (r.check == name) return &r;
  }
  return nullptr;
}

// Folds one verification report into the verdict: it must exist and pass.
bool fold_report(const std::vector<CheckReport>& reports, const std::string& name,
                 std::string& detail) {
  const CheckReport* r = find_report(reports, name);
  if (!expect(r != nullptr, "missing report " + name, detail)) return false;
  return expect(r->pass, name + " failed", detail);
}

std::vector<TestFunction> agreement_battery() {
  return {TestFunction::clamped_abs(10.0),
          TestFunction::clamped_square(100.0),
          TestFunction::neg_clamped_square(100.0),
          TestFunction::clamped_call(1.0, 10.0),
          TestFunction::arctan_scale(1.0),
          TestFunction::smoothed_indicator(0.5, 1.5, 0.25)};
}

}  // namespace

int main() {
  std::cout << "acceptance suite (band [0.25, 1], seed " << kSeed << ")\n" << std::flush;

  const auto band = VolatilityBand::make(0.25, 1.0);
  const SublinearGenerator gen(band);
  const auto scheme = IncrementScheme::rademacher();
  Gate gate;

  // 1. Moments of the terminal law from the guarded PDE solve.
  gate.run(1, "PDE moments on [-8, 8] at dx = 0.01", 30.0, [&](std::string& detail) {
    const auto h = Nonlinearity::from(gen);
    const auto grid = SpatialGrid::make(-8.0, 8.0, 0.01);
    struct Case {
      TestFunction phi;
      double target;
    };
    const Case cases[] = {
        {TestFunction::clamped_square(100.0), 1.0},
        {TestFunction::neg_clamped_square(100.0), -0.25},
        {TestFunction::clamped_abs(10.0), std::sqrt(2.0 / std::numbers::pi)},
    };
    bool ok = true;
    for (const auto& c : cases) {
      const auto start = std::chrono::steady_clock::now();
      const double v = g_expectation(h, c.phi, 1.0, 0.0, grid);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ok &= expect_near(v, c.target, 1e-3, c.phi.name, detail);
      ok &= expect(secs < 10.0, c.phi.name + " solve over 10 s", detail);
    }
    return ok;
  });

  // 2. The backward lattice recursion agrees with the PDE at full depth.
  gate.run(2, "lattice-PDE agreement at n = 4096, five sigma levels", 30.0,
           [&](std::string& detail) {
             const auto h = Nonlinearity::from(gen);
             const auto grid = SpatialGrid::make(-8.0, 8.0, 0.01);
             const auto sigmas = SigmaSet::refined(band, 5);
             const auto partition = TimePartition::uniform(1.0, 4096);
             bool ok = true;
             for (const auto& phi : agreement_battery()) {
               const double dp =
                   dp_expectation(StateSpec::base_only(),
                                  [&phi](std::span<const double> s) { return phi(s[0]); },
                                  partition, sigmas, scheme)
                       .value;
               const double pde = g_expectation(h, phi, 1.0, 0.0, grid);
               ok &= expect_near(dp, pde, 5e-3, phi.name, detail);
             }
             return ok;
           });

  // 3. The recursion equals the exhaustive maximum over adapted policies.
  gate.run(3, "brute-force policy-enumeration equivalence for n <= 4", 1.0,
           [&](std::string& detail) {
             const auto sigmas = SigmaSet::refined(band, 2);  // band endpoints
             const std::vector<TestFunction> battery = {TestFunction::cosine(2.0),
                                                        TestFunction::clamped_abs(10.0),
                                                        TestFunction::arctan_scale(1.0)};
             bool ok = true;
             for (int n = 1; n <= 4; ++n) {
               const auto partition = TimePartition::uniform(1.0, n);
               for (const auto& phi : battery) {
                 const double dp = lattice_expectation([&phi](double b) { return phi(b); },
                                                       partition, sigmas, scheme);
                 const double brute = brute_force_policy_max(
                     [&phi](std::span<const double> vals) { return phi(vals.back()); },
                     partition, sigmas, scheme);
                 ok &= expect_near(dp, brute, 1e-12,
                                   phi.name + " at n = " + std::to_string(n), detail);
               }
             }
             return ok;
           });

  // 4. Perturbed-martingale identities on the product lattice, nodewise.
  gate.run(4, "product-lattice identities at n = 3, Q = 8", 1.0, [&](std::string& detail) {
    const auto sigmas = SigmaSet::refined(band, 2);
    const auto partition = TimePartition::uniform(1.0, 3);
    const std::vector<double> a_list = {1.0, -1.0, 2.0, -2.0};
    bool ok = true;
    for (double eps : {0.1, 0.3}) {
      const auto lat = product_perturb(partition, sigmas, scheme, eps, 8, a_list, 1e-10);
      ok &= expect(!lat.checks.empty(), "no checks ran", detail);
      for (const auto& c : lat.checks) {
        ok &= expect(c.pass,
                     c.name + " at eps = " + std::to_string(eps) + " worst " +
                         std::to_string(c.worst_abs),
                     detail);
      }
    }
    return ok;
  });

  // 5. Generator-widening solutions stay within the explicit sup-norm bound.
  gate.run(5, "generator-perturbation bound for eps in {0.1, 0.2, 0.4}", 30.0,
           [&](std::string& detail) {
             const auto grid = SpatialGrid::make(-8.0, 8.0, 0.01);
             const auto phi = TestFunction::clamped_abs(10.0);
             const std::vector<double> eps = {0.1, 0.2, 0.4};
             const auto rep = compare_perturbed(gen, phi, 1.0, eps, grid);
             bool ok = expect(rep.entries.size() == eps.size(), "entry count", detail);
             for (const auto& e : rep.entries) {
               ok &= expect(e.sup_gap <= e.gap_bound,
                            "eps = " + std::to_string(e.eps) + ": sup gap " +
                                std::to_string(e.sup_gap) + " > bound " +
                                std::to_string(e.gap_bound),
                            detail);
             }
             return ok;
           });

  VerifyOptions opts;
  opts.band = band;
  opts.seed = kSeed;

  // 6. Reflection identity in distribution (one-argument, joint, degenerate).
  gate.run(6, "reflection principle batteries", 180.0, [&](std::string& detail) {
    const auto reports = reflection_reports(opts);
    bool ok = fold_report(reports, "reflection/one_arg_battery", detail);
    ok &= fold_report(reports, "reflection/joint_battery", detail);
    ok &= fold_report(reports, "reflection/degenerate_closed_form", detail);
    ok &= fold_report(reports, "reflection/scale_mismatch_control(expect_fail)", detail);
    if (const auto* r = find_report(reports, "reflection/one_arg_battery")) {
      ok &= expect(r->measured.at("final_max_gap").get<double>() <= 2e-2,
                   "one-argument gap above 2e-2", detail);
      ok &= expect(r->measured.at("nonincreasing").get<bool>(),
                   "gap not nonincreasing over the step counts", detail);
    }
    if (const auto* r = find_report(reports, "reflection/joint_battery")) {
      ok &= expect(r->measured.at("max_gap").get<double>() <= 3e-2,
                   "joint gap above 3e-2", detail);
    }
    return ok;
  });

  // 7. Reflection identity under the dominated three-segment generator.
  gate.run(7, "reflection under the dominated generator", 180.0, [&](std::string& detail) {
    const auto reports = reflection_tilde_reports(default_tilde_generator(), opts);
    bool ok = fold_report(reports, "reflection_tilde/one_arg_battery", detail);
    ok &= fold_report(reports, "reflection_tilde/scale_mismatch_control(expect_fail)", detail);
    if (const auto* r = find_report(reports, "reflection_tilde/one_arg_battery")) {
      ok &= expect(r->measured.at("max_gap").get<double>() <= 3e-2,
                   "one-argument gap above 3e-2", detail);
    }
    return ok;
  });

  // 8. Martingale characterization with its negative control.
  gate.run(8, "martingale characterization of the lattice process", 60.0,
           [&](std::string& detail) {
             const auto reports = levy_reports(opts);
             bool ok = fold_report(reports, "levy/lattice_gbm", detail);
             ok &= fold_report(reports, "levy/sgn_integral", detail);
             ok &= fold_report(reports, "levy/out_of_band_control(expect_fail)", detail);
             return ok;
           });

  // 9. Occupation-cost bound over the policy family.
  gate.run(9, "occupation-cost bound at 1e5 paths", 60.0, [&](std::string& detail) {
    return fold_report(krylov_reports(opts), "krylov/occupation_bound", detail);
  });

  // 10. Small-ball density bound and frozen-sign convergence.
  gate.run(10, "density bound and frozen-sign convergence", 120.0, [&](std::string& detail) {
    bool ok = fold_report(density_reports(opts), "density/small_ball_bound", detail);
    ok &= fold_report(sgn_reports(opts), "sgn/frozen_sign_convergence", detail);
    return ok;
  });

  // 11. Structural properties of the discrete sublinear expectation.
  gate.run(11, "structural property suite", 60.0, [&](std::string& detail) {
    bool ok = true;
    const auto sigmas = SigmaSet::refined(band, 5);

    // Consistency: composing the conditional through an interior layer
    // reproduces the unconditional value (same grid, same arithmetic).
    {
      const auto phi = TestFunction::clamped_abs(10.0);
      const auto partition = TimePartition::uniform(1.0, 8);
      const double full = lattice_expectation([&phi](double b) { return phi(b); }, partition,
                                              sigmas, scheme);
      const LatticeFunction mid = conditional_expectation(
          [&phi](double b) { return phi(b); }, partition, sigmas, scheme, 4);
      const auto first_half = TimePartition::uniform(0.5, 4);
      const double composed = lattice_expectation(
          [&mid](double b) { return mid.interpolate(b); }, first_half, sigmas, scheme);
      ok &= expect_near(composed, full, 1e-12, "tower composition", detail);
    }

    // One-step axioms, nodewise on a shared grid with exact node moves.
    {
      const double dt = 0.0625;
      const double h = band.sigma_upper() * std::sqrt(dt) / 8.0;
      LatticeFunction f, g;
      f.grid = {h, -64, 64};
      g.grid = f.grid;
      for (int j = -64; j <= 64; ++j) {
        const double x = f.grid.x(j);
        f.values.push_back(std::atan(x) + 0.3);
        g.values.push_back(0.5 * std::cos(2.0 * x));
      }
      LatticeFunction fg = f, f2 = f, fc = f, fshift = f;
      for (size_t i = 0; i < f.values.size(); ++i) {
        fg.values[i] = f.values[i] + g.values[i];
        f2.values[i] = 2.0 * f.values[i];
        fc.values[i] = 0.7;
        fshift.values[i] = f.values[i] + 0.1;
      }
      const auto Tf = one_step_sublinear(f, dt, sigmas, scheme);
      const auto Tg = one_step_sublinear(g, dt, sigmas, scheme);
      const auto Tfg = one_step_sublinear(fg, dt, sigmas, scheme);
      const auto Tf2 = one_step_sublinear(f2, dt, sigmas, scheme);
      const auto Tfc = one_step_sublinear(fc, dt, sigmas, scheme);
      const auto Tfs = one_step_sublinear(fshift, dt, sigmas, scheme);
      double worst_sub = 0.0, worst_hom = 0.0, worst_const = 0.0, worst_mono = 0.0;
      for (size_t i = 0; i < f.values.size(); ++i) {
        worst_sub = std::max(worst_sub, Tfg.values[i] - (Tf.values[i] + Tg.values[i]));
        worst_hom = std::max(worst_hom, std::abs(Tf2.values[i] - 2.0 * Tf.values[i]));
        worst_const = std::max(worst_const, std::abs(Tfc.values[i] - 0.7));
        worst_mono = std::max(worst_mono, Tf.values[i] - Tfs.values[i]);
      }
      ok &= expect(worst_sub <= 1e-10, "sub-additivity violated nodewise", detail);
      ok &= expect(worst_hom <= 1e-12, "positive homogeneity violated nodewise", detail);
      ok &= expect(worst_const <= 1e-12, "constants not preserved", detail);
      // Monotone one-step: f <= f + 0.1 everywhere, so Tf <= T(f + 0.1)
      // without any tolerance.
      ok &= expect(worst_mono <= 0.0, "monotonicity violated nodewise", detail);
    }

    // Factorization through the measurable coordinate: a payoff
    // psi(B_i) * phi(B_n - B_i) conditions to psi^+ E[phi] - psi^- E[-phi].
    {
      const auto sigmas2 = SigmaSet::refined(band, 2);
      const auto partition = TimePartition::uniform(1.0, 4);
      const auto tail = TimePartition::uniform(0.5, 2);
      const auto phi = TestFunction::cosine(2.0);
      const PathFunctional f = [&phi](std::span<const double> vals) {
        return vals[2] * phi(vals[4] - vals[2]);
      };
      const double e_phi = tree_expectation(
          [&phi](std::span<const double> vals) { return phi(vals.back()); }, tail, sigmas2,
          scheme);
      const double e_neg = tree_expectation(
          [&phi](std::span<const double> vals) { return -phi(vals.back()); }, tail, sigmas2,
          scheme);
      for (double x : {0.3, -0.7}) {
        const std::vector<double> prefix = {0.0, 0.5, x};
        const double lhs = tree_conditional(f, partition, sigmas2, scheme, prefix);
        const double rhs = x >= 0.0 ? x * e_phi : x * (-e_neg);
        ok &= expect_near(lhs, rhs, 1e-12, "factorization at x = " + std::to_string(x),
                          detail);
      }
    }

    // Mean-certainty additivity: adding a symmetric terminal increment with
    // certain mean zero leaves the value unchanged.
    {
      const auto phi = TestFunction::clamped_abs(10.0);
      const auto partition = TimePartition::uniform(1.0, 16);
      const double base = lattice_expectation([&phi](double b) { return phi(b); }, partition,
                                              sigmas, scheme);
      const double shifted = lattice_expectation(
          [&phi](double b) { return phi(b) + 0.5 * b; }, partition, sigmas, scheme);
      const double linear =
          lattice_expectation([](double b) { return 0.5 * b; }, partition, sigmas, scheme);
      ok &= expect_near(shifted, base, 1e-12, "mean-certainty additivity", detail);
      ok &= expect_near(linear, 0.0, 1e-12, "symmetric increment has value 0", detail);
    }

    // Quadratic variation stays inside the band pathwise, with zero slack,
    // under extremal and state-dependent policies alike.
    {
      const auto partition = TimePartition::uniform(1.0, 64);
      const std::vector<std::pair<std::string, StepPolicy>> policies = {
          {"const lower", [](int, double) { return 0.5; }},
          {"const upper", [](int, double) { return 1.0; }},
          {"bang-bang", [](int, double b) { return b <= 0.0 ? 1.0 : 0.5; }},
      };
      for (const auto& [name, policy] : policies) {
        const auto bundle = simulate(policy, partition, scheme, kSeed, 200, 0.5, 1.0);
        for (const auto& path : bundle.paths) {
          const double qv = quadratic_variation(path).back();
          if (!(qv >= 0.25 && qv <= 1.0)) {
            ok &= expect(false, "terminal QV outside the band under " + name, detail);
            break;
          }
        }
      }
    }

    // Band edges are attained exactly by the tree values of +-QV.
    {
      const auto sigmas2 = SigmaSet::refined(band, 2);
      const auto partition = TimePartition::uniform(1.0, 4);
      const auto qv_terminal = [](std::span<const double> vals) {
        double s = 0.0;
        for (size_t i = 0; i + 1 < vals.size(); ++i) {
          const double d = vals[i + 1] - vals[i];
          s += d * d;
        }
        return s;
      };
      const double up = tree_expectation(qv_terminal, partition, sigmas2, scheme);
      const double lo = tree_expectation(
          [&qv_terminal](std::span<const double> vals) { return -qv_terminal(vals); },
          partition, sigmas2, scheme);
      ok &= expect_near(up, 1.0, 1e-12, "sup of QV", detail);
      ok &= expect_near(lo, -0.25, 1e-12, "sup of -QV", detail);
    }

    // Stochastic-integral second-moment bound with the upper variance.
    {
      const auto sigmas2 = SigmaSet::refined(band, 2);
      const auto partition = TimePartition::uniform(1.0, 5);
      const auto eta = [](double b) { return std::atan(b) + 0.3; };
      const double lhs = tree_expectation(
          [&eta](std::span<const double> vals) {
            double s = 0.0;
            for (size_t i = 0; i + 1 < vals.size(); ++i) {
              s += eta(vals[i]) * (vals[i + 1] - vals[i]);
            }
            return s * s;
          },
          partition, sigmas2, scheme);
      const double dt = 0.2;
      const double rhs_integral = tree_expectation(
          [&eta, dt](std::span<const double> vals) {
            double s = 0.0;
            for (size_t i = 0; i + 1 < vals.size(); ++i) {
              s += eta(vals[i]) * eta(vals[i]) * dt;
            }
            return s;
          },
          partition, sigmas2, scheme);
      ok &= expect(lhs <= band.sigma_upper_sq * rhs_integral + 1e-12,
                   "integral bound with the upper variance violated", detail);
    }

    // Full-value sub-additivity, homogeneity, and monotonicity.
    {
      const auto partition = TimePartition::uniform(1.0, 16);
      const auto phi = TestFunction::arctan_scale(1.0);
      const auto psi = TestFunction::cosine(2.0);
      const double e_sum = lattice_expectation(
          [&](double b) { return phi(b) + psi(b); }, partition, sigmas, scheme);
      const double e_phi =
          lattice_expectation([&phi](double b) { return phi(b); }, partition, sigmas, scheme);
      const double e_psi =
          lattice_expectation([&psi](double b) { return psi(b); }, partition, sigmas, scheme);
      const double e_2phi = lattice_expectation([&phi](double b) { return 2.0 * phi(b); },
                                                partition, sigmas, scheme);
      const double e_dominating = lattice_expectation(
          [&psi](double b) { return psi(b) + 0.25; }, partition, sigmas, scheme);
      ok &= expect(e_sum <= e_phi + e_psi + 1e-12, "sub-additivity of the value", detail);
      ok &= expect_near(e_2phi, 2.0 * e_phi, 1e-12, "positive homogeneity of the value",
                        detail);
      ok &= expect(e_psi <= e_dominating, "monotonicity of the value", detail);
    }

    return ok;
  });

  std::cout << (gate.all_ok ? "ACCEPTANCE: all 11 criteria passed\n"
                            : "ACCEPTANCE: " + std::to_string(gate.n_failed) +
                                  " criterion(s) failed\n");
  return gate.all_ok ? 0 : 1;
}
