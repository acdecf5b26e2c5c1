#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sublin/band.hpp"
#include "sublin/lattice.hpp"
#include "sublin/partition.hpp"

namespace sublin {

// Tuning of the nested-solve expectation for dominated generators. The state
// grid matches the sublinear lattice (spacing sigma_upper*sqrt(mesh)/subdiv,
// truncation trunc_widths*sigma_upper*sqrt(T)); each macro step runs the
// explicit heat scheme for the generator with internal CFL sub-steps.
struct TildeConfig {
  int subdiv = 8;
  double trunc_widths = 8.0;
};

// One backward macro step of length dt applied to a whole line of values with
// node spacing h: the explicit scheme v <- v + dtau * Gt(second difference)
// iterated over ceil(dt * max_variance / h^2) sub-steps, edges frozen (zero
// second difference). Equivalent to running the local one-step solve at every
// node at once, since the stencil is translation-invariant.
std::vector<double> tilde_line_step(const DominatedGenerator& gen,
                                    std::span<const double> line, double h, double dt);

// Reference one-step at a single state: tabulates psi(delta) on the local
// grid delta = -pad*h .. pad*h, runs the same explicit sub-stepped scheme,
// and returns the value at delta = 0. pad must exceed the sub-step count for
// the frozen edges to stay outside the light cone of delta = 0.
double tilde_local_step(const DominatedGenerator& gen,
                        const std::function<double(double)>& psi, double h, double dt,
                        int pad);

// Nonlinear conditional expectation generated by a dominated piecewise-linear
// generator: backward induction over the partition where every one-step
// operator is the explicit heat scheme for the generator applied to
// psi(delta) = values(state updated by a move of delta), evaluated at
// delta = 0. Supported state specs: base_only (payoff of B_T) and
// reflected_gap (payoff of S_T - B_T; the update max(z - delta, 0) folds into
// the line by even reflection of the values at 0). Throws ConfigError when
// the generator fails domination or the spec is unsupported.
double tilde_conditional_expectation(const DominatedGenerator& gen, const StatePayoff& payoff,
                                     const TimePartition& partition, const StateSpec& spec,
                                     const TildeConfig& cfg = {});

// Domination probe battery used to gate the expectation: pairs spanning
// several widths around the breakpoints and the origin.
std::vector<std::pair<double, double>> default_domination_probes(const DominatedGenerator& gen);

}  // namespace sublin
