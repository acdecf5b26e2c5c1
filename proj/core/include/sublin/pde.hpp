#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/grid.hpp"
#include "sublin/test_functions.hpp"

namespace sublin {

// Curvature nonlinearity H driving the marching scheme u_{n+1} = u_n + dt*H(D2 u).
// max_variance bounds 2*dH/da and enters the stability condition
// dt * max_variance / dx^2 <= 1, under which the update is monotone in all
// three stencil values (the property that makes the scheme converge to the
// correct generalized solution).
struct Nonlinearity {
  std::function<double(double)> h;
  double max_variance = 1.0;
  std::string name;

  static Nonlinearity from(const SublinearGenerator& gen);
  // Widened band: effective upper variance grows by eps^2.
  static Nonlinearity from(const SublinearGenerator& gen, double eps);
  static Nonlinearity from(const DominatedGenerator& gen);
  // Linear heat flow with a fixed variance (classical diffusion), used both
  // as an oracle and for band-endpoint comparisons.
  static Nonlinearity classical(double sigma_sq);
};

struct PdeConfig {
  double horizon = 1.0;  // T
  // Requested time step; 0 selects the largest stable step dx^2/max_variance.
  // The step actually used divides the horizon evenly and never exceeds the
  // request, so stability is preserved.
  double dt = 0.0;
  // Default clamp level handed to TestFunction::parse for unbounded shapes;
  // 0 keeps the per-kind defaults (10 for abs-like payoffs at T <= 1, 100 for
  // squares).
  double clamp = 0.0;
};

struct SolveStats {
  double dt = 0.0;       // step actually used
  int n_steps = 0;
  double cfl = 0.0;      // dt * max_variance / dx^2, <= 1 by construction
};

// Explicit monotone march of u_t = H(u_xx) from u(0,.) = phi up to the
// horizon. At the two edge nodes the second difference is taken as 0, so the
// boundary values stay frozen (H(0) = 0 for every generator here); the
// induced error is confined to a neighborhood of the boundary of width a few
// sigma*sqrt(T), which callers exclude from the evaluation region.
// Throws ConfigError when the requested dt violates stability and
// NumericalError if the march produces non-finite values.
GridFunction solve(const Nonlinearity& h, const TestFunction& phi, const PdeConfig& cfg,
                   const SpatialGrid& grid, SolveStats* stats = nullptr);

// As solve, but additionally captures the solution at the step boundaries
// closest to the requested times (clamped to [0, T]).
GridFunction solve_with_snapshots(const Nonlinearity& h, const TestFunction& phi,
                                  const PdeConfig& cfg, const SpatialGrid& grid,
                                  std::span<const double> snapshot_times,
                                  std::vector<GridFunction>* snapshots,
                                  SolveStats* stats = nullptr);

// Terminal-functional expectation: solve and interpolate at x. Requires the
// grid to extend at least 6*sigma_eff*sqrt(T) beyond x on both sides so the
// frozen boundary cannot contaminate the value (ConfigError otherwise).
double g_expectation(const Nonlinearity& h, const TestFunction& phi, double T, double x,
                     const SpatialGrid& grid, double dt = 0.0);

struct PerturbationEntry {
  double eps = 0.0;
  double sup_gap = 0.0;        // max over nodes |u_eps(T,.) - u(T,.)|
  double gap_bound = 0.0;      // lip * sqrt(2T/pi) * eps + margin
  double time_modulus = 0.0;   // max over nodes |u_eps(T,.) - u_eps(T-h,.)|
  double modulus_bound = 0.0;  // lip * sqrt(2(upper_var+1)/pi) * sqrt(h) + margin
  bool pass = false;
};

struct PerturbationReport {
  std::vector<PerturbationEntry> entries;
  double time_shift = 0.0;  // h used by the modulus check
  double margin = 0.0;      // scheme-error allowance added to both bounds
  bool pass = false;
};

// Solves with the band generator and with each widened variant on the same
// grid, then checks the sup-norm gap against lip * sqrt(2T/pi) * eps plus a
// first-order scheme allowance (default margin: 2*dx), and the time-shift
// modulus of the widened solutions against lip * sqrt(2(upper+1)/pi) * sqrt(h)
// plus the same allowance. eps values must lie in (0, 1).
PerturbationReport compare_perturbed(const SublinearGenerator& gen, const TestFunction& phi,
                                     double T, std::span<const double> eps_list,
                                     const SpatialGrid& grid, double dt = 0.0,
                                     double margin = -1.0);

}  // namespace sublin
