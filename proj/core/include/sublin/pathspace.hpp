#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sublin/increments.hpp"
#include "sublin/partition.hpp"
#include "sublin/rng.hpp"

namespace sublin {

// sgn with sgn(0) = -1: the left-derivative convention of |x|, shared with
// the lattice module's Tanaka update.
inline double sgn_left(double x) { return x > 0.0 ? 1.0 : -1.0; }

// The clamp function: 1 for x >= eps, x/eps inside (-eps, eps), -1 below.
// Lipschitz with constant 1/eps; differs from sgn only inside (-eps, eps).
double sgn_clamp(double x, double eps);

// One simulated scenario: values B_0..B_n on the partition plus the sigma
// used on each step.
struct SamplePath {
  TimePartition partition;
  std::vector<double> values;        // n + 1 entries, values[0] = 0
  std::vector<double> policy_trace;  // n entries
};

// A bundle of paths from one (policy, seed) run. Each path owns the stream
// splitmix64(seed, path_id), so the bundle is reproducible path-by-path and
// independent of batching.
struct PathBundle {
  TimePartition partition;
  std::vector<SamplePath> paths;
  uint64_t seed = 0;
  std::string rng_id;
  std::string scheme_name;
};

// Per-step volatility choice as a function of (step index, current value).
using StepPolicy = std::function<double(int step, double b)>;

// Fills one path in place: B_{i+1} = B_i + sigma(i, B_i) * sqrt(dt_i) * zeta
// with zeta drawn from the scheme (sign bits for Rademacher, inverse-CDF
// table lookup for quadrature nodes). The policy must stay inside
// [sigma_lo, sigma_hi] or std::invalid_argument is thrown.
void simulate_into(SamplePath& path, const StepPolicy& policy, const TimePartition& partition,
                   const IncrementScheme& scheme, PathRng& rng, double sigma_lo,
                   double sigma_hi);

// Materializes n_paths scenarios. Memory is n_paths * (2n + 2) doubles:
// intended for export and small studies; estimators should stream paths via
// simulate_into instead.
PathBundle simulate(const StepPolicy& policy, const TimePartition& partition,
                    const IncrementScheme& scheme, uint64_t seed, long n_paths,
                    double sigma_lo, double sigma_hi);

// Running Ito sums I_i = sum_{j<i} eta_j * (B_{j+1} - B_j). eta must carry
// one value per step (n entries; n+1 accepted with the last entry unused).
std::vector<double> ito_sum(std::span<const double> eta, const SamplePath& path);

// QV_i = sum_{j<i} (B_{j+1} - B_j)^2.
std::vector<double> quadratic_variation(const SamplePath& path);

// Polarization form 1/4 * (QV(p1 + p2) - QV(p1 - p2)), computed term by term
// so the polarization identity holds bit-for-bit and the diagonal reproduces
// quadratic_variation exactly. Partitions must match.
std::vector<double> mutual_variation(const SamplePath& p1, const SamplePath& p2);

// z = x + y with y_i = max(0, max_{j<=i}(-x_j)): y is the minimal
// nondecreasing push keeping z nonnegative, and z gains from y only at
// z = 0 (complementarity).
struct SkorokhodDecomposition {
  std::vector<double> x, y, z;
};

SkorokhodDecomposition skorokhod_map(std::span<const double> x);

// Discrete local time at a level: the Tanaka residual
//   L_i = |B_i - a| - |a| - sum_{j<i} sgn(B_j - a) (B_{j+1} - B_j)
// (primary definition), plus the occupation cross-estimator
//   (1/2eps) * sum_{j<i} 1{|B_j - a| < eps} (B_{j+1} - B_j)^2.
struct LocalTimeTrack {
  double level = 0.0;
  std::vector<double> L;
  std::vector<double> ito;         // the running sgn-integral
  std::vector<double> occupation;  // cross-estimator track
  double occupation_eps = 0.0;
};

// eps = 0 picks the default 2 * max_i |dB_i| (which is 2*sigma_upper*sqrt(dt)
// for Rademacher paths under a constant extremal policy).
LocalTimeTrack discrete_local_time(const SamplePath& path, double level, double eps = 0.0);

// CSV export, one row per (path, time): path_id,t,B,sigma,QV,L. sigma on the
// terminal row repeats the last step. Locale-free, '.' decimal.
void write_bundle_csv(std::ostream& os, const PathBundle& bundle);

}  // namespace sublin
