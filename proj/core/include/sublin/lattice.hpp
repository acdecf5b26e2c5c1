#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/increments.hpp"
#include "sublin/partition.hpp"

namespace sublin {

// Uniform node grid j*h for j in [lo, hi] (the origin is always a node, so
// the start state sits exactly on the grid).
struct LatticeGrid {
  double h = 1.0;
  int lo = 0;
  int hi = 0;

  int size() const { return hi - lo + 1; }
  double x(int j) const { return j * h; }
};

// A value per lattice node: the discrete analogue of a function of the state.
struct LatticeFunction {
  LatticeGrid grid;
  std::vector<double> values;

  double at_index(int j) const { return values[j - grid.lo]; }
  double at_origin() const { return at_index(0); }
  // Linear interpolation; beyond the grid the edge value extends flat.
  double interpolate(double x) const;
};

// Tuning of the recombining grids: node spacing is
// sigma_upper * sqrt(mesh) / subdiv, which puts every move sigma*sqrt(dt)
// on an exact node whenever sigma/sigma_upper * subdiv is an integer (true
// for evenly sigma-spaced refinements of subdiv-compatible size); off-grid
// moves fall back to linear interpolation between neighbors. Grids truncate
// at trunc_widths * sigma_upper * sqrt(T) with flat extension — the reachable
// mass beyond is exponentially negligible for bounded Lipschitz payoffs.
struct LatticeConfig {
  int subdiv = 8;
  double trunc_widths = 8.0;
  bool retain_policy = false;  // keep per-layer argmax tables (for table policies)
  bool retain_values = false;  // keep per-layer value tables (for CSV export)
};

// ---------------------------------------------------------------------------
// One-step operator and backward conditional expectations on the base state.

// max over sigma levels of the weighted average of values at the displaced
// nodes x + sigma*sqrt(dt)*z_k: monotone and constant-preserving by
// construction. Children beyond the grid use the flat extension. If argmax is
// non-null it receives the smallest maximizing sigma index per node.
LatticeFunction one_step_sublinear(const LatticeFunction& values, double dt,
                                   const SigmaSet& sigmas, const IncrementScheme& scheme,
                                   std::vector<uint8_t>* argmax = nullptr);

// Backward composition of the one-step operator from the terminal layer down
// to stop_index, starting from terminal(x) tabulated on the reachable grid.
// Returns the tabulated conditional expectation at t_{stop_index}; its value
// at the origin is the unconditional expectation when stop_index = 0.
LatticeFunction conditional_expectation(const std::function<double(double)>& terminal,
                                        const TimePartition& partition, const SigmaSet& sigmas,
                                        const IncrementScheme& scheme, int stop_index,
                                        const LatticeConfig& cfg = {});

// Scalar convenience: conditional_expectation at stop_index 0, at the origin.
double lattice_expectation(const std::function<double(double)>& terminal,
                           const TimePartition& partition, const SigmaSet& sigmas,
                           const IncrementScheme& scheme, const LatticeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Augmented-state dynamic programming.

// Built-in path statistics evolving alongside the base coordinate. The
// "base-free" kinds depend on the move b' - b only, so the base marginal can
// be dropped from the DP state (the payoff must then ignore it too).
enum class AuxKind {
  running_max,     // s' = max(s, b')
  reflected_gap,   // z' = max(z - (b' - b), 0); base-free (z = running max - b)
  gap_second_max,  // s' = s + max((b' - b) - z, 0): companion of reflected_gap
  tanaka,          // l' = l + |b'-a| - |b-a| - sgn(b-a)(b'-b), sgn(0) = -1
  signed_sum,      // m' = m + sgn(b)(b' - b), sgn(0) = -1
  custom,          // arbitrary update map (generic interpolation engine)
};

struct AuxCoordinate {
  AuxKind kind = AuxKind::custom;
  std::string name;
  double initial = 0.0;
  // Recorded Lipschitz constant of the update in (state, move).
  double lipschitz = 1.0;
  // Threshold parameter of the tanaka kind.
  double level = 0.0;
  // Range of the coordinate grid; defaulted per kind from the truncation
  // width when min == max.
  double range_min = 0.0;
  double range_max = 0.0;
  // custom kind only: next value after the base moves from b to b_next.
  std::function<double(double aux, double b, double b_next)> update;

  bool base_free() const {
    return kind == AuxKind::reflected_gap || kind == AuxKind::gap_second_max;
  }
};

// Which coordinates span the DP state and feed the terminal payoff. The
// payoff receives the state as a span laid out [base?, aux...]; at most two
// grid dimensions are supported (base + one aux, or two base-free aux).
struct StateSpec {
  bool payoff_uses_base = true;
  std::vector<AuxCoordinate> coords;

  static StateSpec base_only();
  static StateSpec running_max();          // payoff(b, s)
  static StateSpec reflected_gap();        // payoff(z)
  static StateSpec gap_and_max();          // payoff(z, s)
  static StateSpec tanaka(double level);   // payoff(b, l)
  static StateSpec signed_sum();           // payoff(b, m)

  int dims() const;
};

using StatePayoff = std::function<double(std::span<const double>)>;

struct DpAxis {
  std::string name;
  double origin = 0.0;  // node value = origin + index * h
  int lo = 0;
  int hi = 0;
};

struct DpResult {
  double value = 0.0;  // at the start state (base 0, aux initials)
  double h = 0.0;
  std::vector<DpAxis> axes;
  std::vector<double> sigma_levels;
  // Retained tables, indexed [layer][flattened state], flattening row-major
  // over the axes. argmax entries index sigma_levels (smallest maximizer).
  std::vector<std::vector<uint8_t>> argmax;
  std::vector<std::vector<double>> layer_values;
};

// Backward induction over the augmented state: one_step_sublinear with the
// state-update maps composed inside each child evaluation. Exact node
// arithmetic is used whenever every move lands on the shared grid (the
// built-in aux updates then stay on-grid as well); otherwise children resolve
// by linear interpolation. Throws ConfigError for unsupported dimensions or
// when retained tables would exceed memory bounds.
DpResult dp_expectation(const StateSpec& spec, const StatePayoff& payoff,
                        const TimePartition& partition, const SigmaSet& sigmas,
                        const IncrementScheme& scheme, const LatticeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Exact evaluators for small step counts (oracles and property tests).

// Path functional on the full value vector (b_0, ..., b_n).
using PathFunctional = std::function<double(std::span<const double>)>;

// Conditional sublinear expectation of an arbitrary path functional at the
// history prefix (b_0, ..., b_i), by exhaustive recursion over the remaining
// increment histories. Cost (levels * scheme nodes)^(n - i): intended for
// small n. prefix must contain at least the start value b_0 = 0.
double tree_conditional(const PathFunctional& f, const TimePartition& partition,
                        const SigmaSet& sigmas, const IncrementScheme& scheme,
                        std::span<const double> prefix);

// tree_conditional at the trivial prefix {0}: the unconditional value.
double tree_expectation(const PathFunctional& f, const TimePartition& partition,
                        const SigmaSet& sigmas, const IncrementScheme& scheme);

// Independent oracle: explicit maximum over every adapted volatility
// assignment (one sigma per (step, observed increment history) node), each
// policy evaluated by full enumeration of the increment draws. Equals the
// backward recursion by the dynamic-programming principle, but shares none of
// its code path. Cost levels^(nodes) * draws^n; throws ConfigError when the
// policy count exceeds 2^26.
double brute_force_policy_max(const PathFunctional& f, const TimePartition& partition,
                              const SigmaSet& sigmas, const IncrementScheme& scheme);

}  // namespace sublin
