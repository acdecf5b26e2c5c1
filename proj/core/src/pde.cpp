#include "sublin/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sublin/errors.hpp"

namespace sublin {

Nonlinearity Nonlinearity::from(const SublinearGenerator& gen) {
  return {[gen](double a) { return gen.eval(a); }, gen.band().sigma_upper_sq, "band"};
}

Nonlinearity Nonlinearity::from(const SublinearGenerator& gen, double eps) {
  if (eps < 0.0) throw std::invalid_argument("perturbed nonlinearity: eps must be >= 0");
  return {[gen, eps](double a) { return gen.eval_epsilon(a, eps); },
          gen.band().sigma_upper_sq + eps * eps, "band+eps"};
}

Nonlinearity Nonlinearity::from(const DominatedGenerator& gen) {
  return {[gen](double a) { return gen.eval(a); }, gen.max_variance(), "dominated"};
}

Nonlinearity Nonlinearity::classical(double sigma_sq) {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("classical nonlinearity: variance must be >= 0");
  return {[sigma_sq](double a) { return 0.5 * sigma_sq * a; }, sigma_sq, "classical"};
}

namespace {

SolveStats plan_steps(const Nonlinearity& h, const PdeConfig& cfg, const SpatialGrid& grid) {
  if (!(cfg.horizon > 0.0)) throw ConfigError("pde: horizon must be > 0");
  const double dx2 = grid.dx * grid.dx;
  const double stable = dx2 / h.max_variance;
  double dt_req = cfg.dt > 0.0 ? cfg.dt : stable;
  if (dt_req * h.max_variance / dx2 > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "pde: stability requires dt <= dx^2/max_variance = " << stable << ", got dt = "
       << dt_req;
    throw ConfigError(os.str());
  }
  SolveStats stats;
  stats.n_steps = static_cast<int>(std::ceil(cfg.horizon / dt_req - 1e-12));
  stats.n_steps = std::max(stats.n_steps, 1);
  stats.dt = cfg.horizon / stats.n_steps;
  stats.cfl = stats.dt * h.max_variance / dx2;
  return stats;
}

void check_finite(const std::vector<double>& u, int step) {
  for (double v : u) {
    if (!std::isfinite(v)) {
      throw NumericalError("pde: non-finite value appeared during the march at step " +
                           std::to_string(step));
    }
  }
}

}  // namespace

GridFunction solve_with_snapshots(const Nonlinearity& h, const TestFunction& phi,
                                  const PdeConfig& cfg, const SpatialGrid& grid,
                                  std::span<const double> snapshot_times,
                                  std::vector<GridFunction>* snapshots, SolveStats* stats_out) {
  const SolveStats stats = plan_steps(h, cfg, grid);
  if (stats_out) *stats_out = stats;

  // Map each requested snapshot time to the nearest step boundary.
  std::vector<std::pair<int, size_t>> snap_steps;
  if (snapshots) {
    snapshots->clear();
    snapshots->resize(snapshot_times.size());
    for (size_t i = 0; i < snapshot_times.size(); ++i) {
      const double t = std::clamp(snapshot_times[i], 0.0, cfg.horizon);
      const int step = static_cast<int>(std::lround(t / stats.dt));
      snap_steps.emplace_back(step, i);
    }
    std::sort(snap_steps.begin(), snap_steps.end());
  }

  const int n = grid.n_nodes;
  std::vector<double> u(n), next(n);
  for (int j = 0; j < n; ++j) u[j] = phi(grid.x(j));

  auto take_snapshots = [&](int step) {
    if (!snapshots) return;
    for (const auto& [snap_step, idx] : snap_steps) {
      if (snap_step == step) {
        (*snapshots)[idx] = GridFunction{grid, u, step * stats.dt};
      }
    }
  };

  take_snapshots(0);
  const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
  for (int step = 0; step < stats.n_steps; ++step) {
    // Edge nodes: second difference taken as 0; H(0) = 0 keeps them frozen.
    next[0] = u[0];
    next[n - 1] = u[n - 1];
    for (int j = 1; j < n - 1; ++j) {
      const double d2 = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dx2;
      next[j] = u[j] + stats.dt * h.h(d2);
    }
    u.swap(next);
    if ((step & 255) == 255) check_finite(u, step + 1);
    take_snapshots(step + 1);
  }
  check_finite(u, stats.n_steps);

  return GridFunction{grid, std::move(u), cfg.horizon};
}

GridFunction solve(const Nonlinearity& h, const TestFunction& phi, const PdeConfig& cfg,
                   const SpatialGrid& grid, SolveStats* stats) {
  return solve_with_snapshots(h, phi, cfg, grid, {}, nullptr, stats);
}

double g_expectation(const Nonlinearity& h, const TestFunction& phi, double T, double x,
                     const SpatialGrid& grid, double dt) {
  const double reach = 6.0 * std::sqrt(h.max_variance * T);
  if (grid.x_min > x - reach || grid.x_max < x + reach) {
    std::ostringstream os;
    os << "g_expectation: grid [" << grid.x_min << ", " << grid.x_max
       << "] must extend 6*sigma_eff*sqrt(T) = " << reach << " beyond the evaluation point "
       << x;
    throw ConfigError(os.str());
  }
  PdeConfig cfg;
  cfg.horizon = T;
  cfg.dt = dt;
  return solve(h, phi, cfg, grid).interpolate(x);
}

PerturbationReport compare_perturbed(const SublinearGenerator& gen, const TestFunction& phi,
                                     double T, std::span<const double> eps_list,
                                     const SpatialGrid& grid, double dt, double margin) {
  PerturbationReport report;
  report.margin = margin >= 0.0 ? margin : 2.0 * grid.dx;

  PdeConfig cfg;
  cfg.horizon = T;
  cfg.dt = dt;
  const GridFunction base = solve(Nonlinearity::from(gen), phi, cfg, grid);

  // One common shift for the time-modulus check; kept well above the step
  // size so the snapshot lands on an earlier layer for every eps.
  report.time_shift = T / 64.0;
  const double modulus_coeff =
      phi.lip_constant * std::sqrt(2.0 * (gen.band().sigma_upper_sq + 1.0) / M_PI);

  report.pass = true;
  for (double eps : eps_list) {
    if (!(eps > 0.0 && eps < 1.0)) {
      throw std::invalid_argument("compare_perturbed: eps values must lie in (0, 1)");
    }
    PerturbationEntry entry;
    entry.eps = eps;

    std::vector<GridFunction> snaps;
    const double snap_time[] = {T - report.time_shift};
    SolveStats stats;
    const GridFunction ue = solve_with_snapshots(Nonlinearity::from(gen, eps), phi, cfg, grid,
                                                 snap_time, &snaps, &stats);
    entry.sup_gap = ue.sup_distance(base);
    entry.gap_bound = phi.lip_constant * std::sqrt(2.0 * T / M_PI) * eps + report.margin;

    const double h_actual = T - snaps[0].time_stamp;
    entry.time_modulus = ue.sup_distance(snaps[0]);
    entry.modulus_bound = modulus_coeff * std::sqrt(h_actual) + report.margin;

    entry.pass = entry.sup_gap <= entry.gap_bound && entry.time_modulus <= entry.modulus_bound;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace sublin
