#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/report.hpp"

namespace sublin {

// Shared knobs for the verification harness. Defaults reproduce the
// acceptance settings; tests shrink them where a cheaper run still proves
// the point. Every report embeds the values it actually used.
struct VerifyOptions {
  VolatilityBand band = {};  // (0.25, 1)
  uint64_t seed = 424242;

  int sigma_levels = 5;  // refinement of the sigma set for lattice runs

  // Martingale / second-moment identity checks run at this step count (they
  // are exact nodewise identities, so small n suffices).
  int identity_steps = 16;
  // Distribution-match step count for the characterization check.
  int distribution_steps = 4096;

  std::vector<int> reflection_steps = {256, 512, 1024};
  int joint_steps = 256;
  int degenerate_steps = 4096;
  int tilde_steps = 256;

  long mc_paths = 100000;
  int mc_steps = 256;

  std::vector<int> sgn_coarse = {16, 64, 256, 1024};
  int sgn_fine_steps = 4096;
  long sgn_paths = 20000;

  double pde_dx = 0.01;
  double pde_halfwidth = 8.0;  // spatial domain [-halfwidth, halfwidth]
  double horizon = 1.0;
};

// Martingale characterization: three candidate processes on the lattice.
//   (1) the lattice process itself;
//   (2) the sign-integral sum of sgn(B_i) * dB_i (its augmented DP provably
//       collapses to the base recursion; the collapse residual at small n is
//       measured and reported);
//   (3) a control whose volatility exits the band on half the state space —
//       it must break the second-moment identity, and its report passes only
//       when that violation is detected.
// Checks per candidate: (i) one-step symmetric-martingale identity, (ii)
// second-moment identity against 2*G(a)*dt for a in {+-1, +-2}, (iii)
// terminal distribution match against the PDE solution over a test battery.
std::vector<CheckReport> levy_reports(const VerifyOptions& opts);

// Reflection identity in distribution: payoffs of the gap S_T - B_T against
// payoffs of |B_T| (one-argument battery, several step counts, gap must
// shrink), the joint law (S_T - B_T, S_T) against (|B_T|, L_T(0)), the
// degenerate band against Gauss-Hermite closed forms, and a scale-mismatch
// control that must be flagged.
std::vector<CheckReport> reflection_reports(const VerifyOptions& opts);

// Reflection identity under a dominated generator, via the nested explicit
// solves. The generator must pass domination.
std::vector<CheckReport> reflection_tilde_reports(const DominatedGenerator& gen,
                                                  const VerifyOptions& opts);

// Occupation-cost bound: sup over a policy family of the Monte Carlo mean of
// sum |g(B_i)| (dB_i)^2 against (sigma_up^2 T)^{(p-1)/p} (sigma_up
// sqrt(2T/pi))^{1/p} ||g||_p for a three-function battery, plus a control
// bound built from the lower band edge that the measurement must exceed.
std::vector<CheckReport> krylov_reports(const VerifyOptions& opts);

// Small-ball bound: expectation of a smoothed indicator of (-eps, eps) at
// time t against exp(1/(2 sigma_up^2)) eps^{2 alpha} / t^alpha over an
// (eps, t) grid, plus an exponent-doubled control bound that must fail.
// Skips (with explanation) when the band is degenerate at zero.
std::vector<CheckReport> density_reports(const VerifyOptions& opts);

// Convergence of the piecewise-frozen sign process: D(n) = sup over policies
// of E int |sgn(B_anchor(t)) - sgn(B_t)|^2 dt on refining partitions must be
// nonincreasing (paired 3-stderr test) and the finest value must sit under
// the explicit cap minimized over the eps-split. Control: signs from an
// independent path keep D near 2. Skips when sigma_lower = 0.
std::vector<CheckReport> sgn_reports(const VerifyOptions& opts);

// Generator-perturbation bound re-exported as a report, plus a control with
// a tenfold-shrunk bound that must be violated.
std::vector<CheckReport> perturbation_reports(const VerifyOptions& opts);

// Everything above in a fixed order.
std::vector<CheckReport> run_all_verifications(const DominatedGenerator& gen,
                                               const VerifyOptions& opts);

// The default dominated generator: three segments with slopes
// (0.2, 0.35, 0.5) and breakpoints (-1, 1) inside the default band.
DominatedGenerator default_tilde_generator();

}  // namespace sublin
